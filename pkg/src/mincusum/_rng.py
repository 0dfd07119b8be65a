"""Counter-based Gaussian streams for reproducible path simulation.

Every simulated observation increment is driven by a standard normal that is
addressable by the tuple (seed, replication, sensor, step).  This makes the
noise stream independent of execution order: replications can be simulated in
any order, in blocks of any size, or sensor-by-sensor, and the draws are
identical.  The construction is

    stream base  = splitmix64 mix of (seed, replication, sensor)
    word k       = splitmix64 finalizer applied to base + (k+1) * GAMMA
    normal k     = 256-layer ziggurat driven by word k (rare rejection paths
                   consume extra words hashed from a per-step side stride)

splitmix64 with the golden-gamma increment is the generator used by Java's
SplittableRandom and passes BigCrush; the ziggurat is the Marsaglia-Tsang
rejection scheme with a 52-bit mantissa and 256 layers (the same structure as
numpy's normal sampler).  Distributional correctness is covered by the
statistical tests in tests/test_rng.py.

Everything here is numba-jitted so the hot path stays inside compiled code.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

__all__ = [
    "stream_state",
    "normal_at",
    "normal_block",
    "ZIG_R",
    "ziggurat_tables",
]

# golden-ratio increment and a second odd stride for rejection redraws
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SIDE = np.uint64(0x632BE59BD9B4E019)

# rightmost layer boundary of the 256-layer normal ziggurat
ZIG_R = 3.6541528853610088


def _build_ziggurat():
    """Build (wi, ki, fi) tables for the 256-layer normal ziggurat.

    Layer boundaries x[0] > x[1]=R > ... > x[256]=0 are chosen so every box
    has equal area v; x[0] = v/f(R) is the pseudo-width of the base strip that
    also covers the tail.  ki are 52-bit integer acceptance thresholds, wi the
    scale factors mapping 52-bit words onto [0, x[i]).
    """
    n = 256
    f = lambda x: math.exp(-0.5 * x * x)
    tail = math.sqrt(math.pi / 2.0) * math.erfc(ZIG_R / math.sqrt(2.0))
    v = ZIG_R * f(ZIG_R) + tail
    x = np.zeros(n + 1)
    x[0] = v / f(ZIG_R)
    x[1] = ZIG_R
    for i in range(2, n):
        x[i] = math.sqrt(-2.0 * math.log(f(x[i - 1]) + v / x[i - 1]))
    x[n] = 0.0
    m52 = float(1 << 52)
    wi = x[:n] / m52
    ki = np.empty(n, dtype=np.uint64)
    ki[0] = np.uint64(int((ZIG_R / x[0]) * m52))
    for i in range(1, n):
        ki[i] = np.uint64(int((x[i + 1] / x[i]) * m52))
    fi = np.exp(-0.5 * x * x)
    return wi, ki, fi, x


_WI, _KI, _FI, _XBOUND = _build_ziggurat()


def ziggurat_tables():
    """Return (wi, ki, fi, x) ziggurat tables (read-only views for tests)."""
    return _WI, _KI, _FI, _XBOUND


def _mask64(value):
    """Clamp a Python integer onto the uint64 ring (negatives wrap)."""
    return np.uint64(int(value) & 0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit("uint64(uint64, uint64, uint64)", cache=True)
def _stream_state(seed, rep, sensor):
    z = _mix64(seed + _GAMMA)
    z = _mix64(z + rep + _GAMMA)
    z = _mix64(z + sensor + _GAMMA)
    return z


def stream_state(seed, rep, sensor):
    """Mix (seed, replication, sensor) into a 64-bit stream base state."""
    return _stream_state(_mask64(seed), _mask64(rep), _mask64(sensor))


@njit(cache=True, inline="always")
def _zig_slow(u, c, wi, ki, fi):
    """Rejection fix-up after a failed fast accept for counter word c."""
    idx = np.int64(u & np.uint64(0xFF))
    sign = (u >> np.uint64(8)) & np.uint64(1)
    rabs = u >> np.uint64(12)
    sub = np.uint64(1)
    while True:
        if idx == 0:
            # tail beyond R: x = R - log(U1)/R accepted when 2 log(U2) < -x^2
            while True:
                u1 = _mix64(c + sub * _SIDE)
                sub += np.uint64(1)
                u2 = _mix64(c + sub * _SIDE)
                sub += np.uint64(1)
                xx = -math.log(((u1 >> np.uint64(11)) + np.uint64(1)) * (1.0 / 9007199254740993.0)) / ZIG_R
                yy = -math.log(((u2 >> np.uint64(11)) + np.uint64(1)) * (1.0 / 9007199254740993.0))
                if yy + yy > xx * xx:
                    out = ZIG_R + xx
                    return -out if sign else out
        else:
            xv = rabs * wi[idx]
            uf = _mix64(c + sub * _SIDE)
            sub += np.uint64(1)
            uu = (uf >> np.uint64(11)) * (1.0 / 9007199254740992.0)
            if fi[idx + 1] + uu * (fi[idx] - fi[idx + 1]) < math.exp(-0.5 * xv * xv):
                return -xv if sign else xv
        u = _mix64(c + sub * _SIDE)
        sub += np.uint64(1)
        idx = np.int64(u & np.uint64(0xFF))
        sign = (u >> np.uint64(8)) & np.uint64(1)
        rabs = u >> np.uint64(12)
        xv = rabs * wi[idx]
        if rabs < ki[idx]:
            return -xv if sign else xv


@njit(cache=True, inline="always")
def _normal_from_counter(c, wi, ki, fi):
    u = _mix64(c)
    idx = np.int64(u & np.uint64(0xFF))
    rabs = u >> np.uint64(12)
    if rabs < ki[idx]:
        xv = rabs * wi[idx]
        return -xv if (u >> np.uint64(8)) & np.uint64(1) else xv
    return _zig_slow(u, c, wi, ki, fi)


@njit("float64(uint64, uint64, float64[:], uint64[:], float64[:])", cache=True)
def _normal_at(state, step, wi, ki, fi):
    c = state + (step + np.uint64(1)) * _GAMMA
    return _normal_from_counter(c, wi, ki, fi)


@njit("float64[:](uint64, uint64, int64, float64[:], uint64[:], float64[:])", cache=True)
def _normal_block(state, step0, n, wi, ki, fi):
    out = np.empty(n)
    c = state + step0 * _GAMMA
    for i in range(n):
        c += _GAMMA
        out[i] = _normal_from_counter(c, wi, ki, fi)
    return out


def normal_at(seed, rep, sensor, step):
    """The standard normal at index ``step`` of stream (seed, rep, sensor)."""
    if step < 0:
        raise ValueError("step must be >= 0")
    return _normal_at(stream_state(seed, rep, sensor), np.uint64(step), _WI, _KI, _FI)


def normal_block(seed, rep, sensor, step0, n):
    """Normals for steps [step0, step0+n) of stream (seed, rep, sensor)."""
    if step0 < 0:
        raise ValueError("step0 must be >= 0")
    return _normal_block(stream_state(seed, rep, sensor), np.uint64(step0),
                         int(n), _WI, _KI, _FI)
