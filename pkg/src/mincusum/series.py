"""Eigenvalue-series evaluation of two-sensor CUSUM first-passage means.

For a reflected drifted Brownian CUSUM statistic run against threshold
``h > 2``, the expected time until the first of two independent statistics
crosses has an exact expansion over the positive roots of three
transcendental equations (with p = 2/h):

    tan x  = -p x      (phi family,   one root per (n*pi - pi/2, n*pi))
    tan x  =  p x      (theta family, one root per (n*pi, n*pi + pi/2))
    tanh x =  p x      (eta, a single positive root, existing iff p < 1)

Two expansions are evaluated here:

* ``e0_inf_series``  -- mean detection delay when one sensor changed at time
  zero and the other never changes: S1 + S2 + S3 (phi/theta cross terms, a
  phi sum damped by cosh^2(eta), and the dominant phi sum).
* ``einf_inf_series`` -- mean time between false alarms when neither sensor
  changes: S4 + S5 + S6 (theta/theta cross terms, a damped theta sum, and a
  closed-form eta term carrying the e^h growth).

Large-h leading behaviour: S3 -> (2/mu^2)(h-1) and S6 -> (e^h-4)/mu^2, with
every other term vanishing.  ``main_terms_general_n`` gives the analogous
leading terms for N >= 2 sensors.

Numerical notes
---------------
Roots are stored as offsets from the nearest tangent pole ((n -/+ 1/2)*pi),
where the defining equation reads ``cot(d) = p*x``.  Offsets keep full
relative precision where the root hugs the pole, so residuals of the
represented root stay near machine level even for thousands of roots (a
float64 root *value* alone cannot: tan is too steep there).  sin/cos of the
roots are recovered exactly from the offsets.

Truncation control: every sum's tail is certified by the majorant
``p / (1 + p^2 x^2)^(3/2)`` (which dominates each term) combined with the
sign alternation of consecutive terms; double sums additionally use a
doubling step (K vs 2K) whose difference over-estimates the remaining error
under the observed ~K^-3 convergence.  The hyperbolic prefactors are
accumulated in log space so large thresholds do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, ValidationError

__all__ = [
    "SpectralRoots",
    "SeriesValue",
    "find_roots",
    "default_root_count",
    "e0_inf_series",
    "einf_inf_series",
    "main_terms_general_n",
    "result1_check",
    "result2_check",
    "ncensors_sum_check",
]

_HALF_PI = math.pi / 2.0

# hard caps before a ConvergenceError is raised
_K_MAX_SINGLE = 1 << 20
_K_MAX_DOUBLE = 1 << 13


def default_root_count(p):
    """Default truncation length: the majorant's support is x <~ 10/p."""
    return max(50, math.ceil(10.0 / p))


# ---------------------------------------------------------------------------
# root families
# ---------------------------------------------------------------------------

def _solve_offsets(p, k, family):
    """Solve cot(d) = p * x(d) on d in (0, pi/2) for the first k roots.

    family 'phi':   x = (n - 1/2)*pi + d   (tan x = -p x)
    family 'theta': x = (n + 1/2)*pi - d   (tan x = +p x)

    Returns (x, sin_x, cos_x, offsets, residuals) with trig recovered from
    the offsets, and residuals = |tan x -/+ p x| evaluated in offset space.
    """
    n = np.arange(1, k + 1, dtype=np.float64)
    if family == "phi":
        pole = (n - 0.5) * math.pi
        slope = p
    elif family == "theta":
        pole = (n + 0.5) * math.pi
        slope = -p
    else:  # pragma: no cover - internal
        raise ValueError(family)

    def g(d):
        return np.cos(d) / np.sin(d) - p * pole - slope * d

    lo = np.full(k, 1e-18)
    hi = np.full(k, _HALF_PI - 1e-16)
    # g is strictly decreasing: g(lo) > 0 > g(hi)
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0.0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    d = 0.5 * (lo + hi)
    for _ in range(5):  # Newton polish, clipped to the bisection bracket
        sd = np.sin(d)
        gd = np.cos(d) / sd - p * pole - slope * d
        gp = -1.0 / (sd * sd) - slope
        d = np.clip(d - gd / gp, lo, hi)

    sd = np.sin(d)
    cd = np.cos(d)
    resid = np.abs(cd / sd - p * pole - slope * d)
    if family == "phi":
        x = pole + d
        sgn = np.where(n % 2 == 1, 1.0, -1.0)
        sin_x = sgn * cd          # sin((n-1/2)pi + d) = (-1)^(n+1) cos d
        cos_x = -sgn * sd         # cos((n-1/2)pi + d) = (-1)^n sin d
    else:
        x = pole - d
        sgn = np.where(n % 2 == 1, -1.0, 1.0)
        sin_x = sgn * cd          # sin((n+1/2)pi - d) = (-1)^n cos d
        cos_x = sgn * sd          # cos((n+1/2)pi - d) = (-1)^n sin d
    return x, sin_x, cos_x, d, resid


def _solve_eta(p):
    """The positive root of tanh x = p x (requires p < 1)."""
    f = lambda x: math.tanh(x) - p * x
    hi = 1.0 / p  # tanh(1/p) < 1 = p * (1/p)
    lo = min(1e-8, 0.5 * math.sqrt(3.0 * (1.0 - p)))
    if f(lo) <= 0.0:
        lo = 1e-300
    eta = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    for _ in range(2):
        # sech^2(eta) underflows harmlessly to 0 for large eta
        fp = (1.0 / math.cosh(eta)) ** 2 - p if eta < 350.0 else -p
        if fp == 0.0:
            break
        eta -= (math.tanh(eta) - p * eta) / fp
    return eta


@dataclass(frozen=True)
class SpectralRoots:
    """The first ``count`` roots of each family for threshold h (p = 2/h).

    phi/theta hold the root values; *_offset hold the distances to the
    adjacent tangent pole, which carry the full-precision representation
    (see module docstring).  sin/cos arrays are derived from the offsets.
    """

    h: float
    p: float
    eta: float
    count: int
    phi: np.ndarray
    theta: np.ndarray
    phi_offset: np.ndarray = field(repr=False)
    theta_offset: np.ndarray = field(repr=False)
    sin_phi: np.ndarray = field(repr=False)
    cos_phi: np.ndarray = field(repr=False)
    sin_theta: np.ndarray = field(repr=False)
    cos_theta: np.ndarray = field(repr=False)

    def residuals(self):
        """(phi, theta, eta) residuals of the represented roots.

        Evaluated in offset space, where tan x = -/+ cot(offset) exactly,
        so the result is not limited by float64 range reduction of tan.
        """
        rp = np.abs(np.cos(self.phi_offset) / np.sin(self.phi_offset)
                    - self.p * self.phi)
        rt = np.abs(np.cos(self.theta_offset) / np.sin(self.theta_offset)
                    - self.p * self.theta)
        re = abs(math.tanh(self.eta) - self.p * self.eta)
        return rp, rt, re


def find_roots(h, k=None, tol=None):
    """Enumerate the first k roots of each family for threshold h > 2.

    Raises DomainError for h <= 2 (the tanh root does not exist) and
    ConvergenceError if any residual exceeds ``tol``.  The default tolerance
    is 1e-12, relaxed for very long root lists where float64 cannot do
    better: the residual of root x scales like eps * (2/h) * x because the
    defining cotangent steepens near the poles.
    """
    if not (h > 2.0):
        raise DomainError(
            "series threshold must satisfy h > 2 (tanh x = (2/h) x has no "
            "positive root otherwise); got h=%r" % (h,))
    if not math.isfinite(h):
        raise ValidationError("h must be finite")
    p = 2.0 / h
    if k is None:
        k = default_root_count(p)
    k = int(k)
    if tol is None:
        tol = max(1e-12, 8.0 * np.finfo(float).eps * p * k * math.pi)
    if k < 1:
        raise ValidationError("root count must be >= 1")
    if k > _K_MAX_SINGLE:
        raise ValidationError("root count %d exceeds cap %d" % (k, _K_MAX_SINGLE))

    phi, sp, cp, dp, rp = _solve_offsets(p, k, "phi")
    tht, st, ct, dt_, rt = _solve_offsets(p, k, "theta")
    eta = _solve_eta(p)
    re = abs(math.tanh(eta) - p * eta)
    worst = max(rp.max(), rt.max(), re)
    if worst > tol:
        raise ConvergenceError(
            "root residual %.3e exceeds tol %.3e" % (worst, tol),
            details={"h": h, "k": k, "worst_residual": worst})
    return SpectralRoots(
        h=float(h), p=p, eta=eta, count=k, phi=phi, theta=tht,
        phi_offset=dp, theta_offset=dt_, sin_phi=sp, cos_phi=cp,
        sin_theta=st, cos_theta=ct)


# ---------------------------------------------------------------------------
# hyperbolic prefactors (log space)
# ---------------------------------------------------------------------------

def _log_sinh(x):
    return x + math.log1p(-math.exp(-2.0 * x)) - math.log(2.0)


def _log_cosh(x):
    return x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)


def _sinhcosh_minus_x(x):
    """sinh(x)cosh(x) - x = sinh(2x)/2 - x, cancellation-safe for small x."""
    if x < 0.25:
        t = 2.0 * x
        t2 = t * t
        # sum_{k>=1} (2x)^(2k+1) / (2 (2k+1)!)
        return (t * t2 / 12.0) * (1.0 + t2 / 20.0 * (1.0 + t2 / 42.0 * (1.0 + t2 / 72.0)))
    return math.sinh(2.0 * x) / 2.0 - x


def _log_sinhcosh_minus_x(x):
    if x > 18.0:
        # (e^{2x}/4) (1 - e^{-4x} - 4x e^{-2x})
        return 2.0 * x - math.log(4.0) + math.log1p(-math.exp(-4.0 * x) - 4.0 * x * math.exp(-2.0 * x))
    return math.log(_sinhcosh_minus_x(x))


# ---------------------------------------------------------------------------
# sum kernels and tail bounds
# ---------------------------------------------------------------------------

def _weight_terms(x, s, c):
    """Signed single-sum terms  sin^3(x) cos^2(x) / (x - sin(x)cos(x))."""
    return (s ** 3) * (c ** 2) / (x - s * c)


def _majorant(p, x):
    """Per-term bound p / (1 + p^2 x^2)^(3/2) (valid for both families)."""
    return p / (1.0 + (p * x) ** 2) ** 1.5


def _alternating_tail(p, terms, x_next):
    """Bound |sum of omitted terms| for a sign-alternating decaying series.

    Uses the first-omitted-term bound via the majorant at the next root's
    bracket.  Falls back to the integrated majorant if the computed tail is
    not yet alternating-decreasing.
    """
    k = len(terms)
    look = min(12, k - 1)
    t = terms[-look - 1:]
    alternates = bool(np.all(t[1:] * t[:-1] < 0.0))
    decreasing = bool(np.all(np.abs(t[1:]) <= np.abs(t[:-1]) * (1 + 1e-12)))
    if alternates and decreasing:
        return _majorant(p, x_next)
    # integrated majorant, one root per pi-length interval
    u = p * (x_next - math.pi)
    return (1.0 / math.pi) * (1.0 - u / math.hypot(1.0, u)) if u > 0 else 1.0


def _double_sum(w1, cs1, w2, cs2, extra=0.0, block=512):
    """sum_{i,j} w1_i w2_j / (cs1_i + cs2_j + extra * cs1_i * cs2_j).

    Returns (total, row_sums) where row_sums[i] marginalizes over j.
    """
    k1 = len(w1)
    rows = np.empty(k1)
    for i0 in range(0, k1, block):
        i1 = min(i0 + block, k1)
        denom = cs1[i0:i1, None] + cs2[None, :]
        if extra != 0.0:
            denom = denom + extra * (cs1[i0:i1, None] * cs2[None, :])
        blockvals = (w1[i0:i1, None] * w2[None, :]) / denom
        rows[i0:i1] = blockvals.sum(axis=1)
    return float(rows.sum()), rows


@dataclass(frozen=True)
class SeriesValue:
    """An evaluated expectation with its term breakdown and error budget."""

    total: float
    terms: dict
    truncation_error_estimate: float
    k_used: int


def _k_single_for(p, prefactor, target):
    """Root count so the first omitted majorant term is below target."""
    if prefactor <= 0.0 or target <= 0.0:
        return 64
    # majorant ~ 1/(p^2 x^3) for large x
    x = (prefactor / (target * p * p)) ** (1.0 / 3.0)
    return max(64, math.ceil(x / math.pi) + 2)


def _grow_roots(h, k):
    k = int(min(k, _K_MAX_SINGLE))
    return find_roots(h, k=k, tol=max(1e-12, 64 * np.finfo(float).eps * k * math.pi * (2.0 / h)))


def _adaptive_double(h, make_roots, weights_of, prefactor, target, k0):
    """Evaluate a signed double sum adaptively, doubling K until certified.

    ``weights_of(roots)`` returns (w1, cs1, w2, cs2, extra).  The estimate is
    |S(2K) - S(K)| plus the last row-sum magnitude; under the observed K^-3
    convergence the difference over-estimates the error left in S(2K).
    """
    k = max(64, k0)
    est = math.inf
    while True:
        roots = make_roots(2 * k)
        w1, cs1, w2, cs2, extra = weights_of(roots)
        w1, cs1, w2, cs2 = w1[:2 * k], cs1[:2 * k], w2[:2 * k], cs2[:2 * k]
        s_half, _ = _double_sum(w1[:k], cs1[:k], w2[:k], cs2[:k], extra)
        s_full, rows = _double_sum(w1, cs1, w2, cs2, extra)
        est = abs(s_full - s_half) + abs(rows[-1])
        if prefactor * est <= target:
            return s_full, prefactor * est, 2 * k
        k *= 2
        if 2 * k > _K_MAX_DOUBLE:
            raise ConvergenceError(
                "double sum not certified below %.3e by K=%d (last estimate %.3e)"
                % (target, k, prefactor * est),
                details={"h": h, "k": k, "estimate": prefactor * est})


def e0_inf_series(mu, h, tol=1e-8):
    """Mean detection delay E{T_h} with change at 0 on one of two sensors.

    Evaluates S1 + S2 + S3 for threshold h > 2 and drift mu > 0.  ``tol`` is
    the absolute truncation budget per S-term; the reported estimate is the
    certified bound on the total truncation error.
    """
    _check_series_args(mu, h, tol)
    p = 2.0 / h
    eta = _solve_eta(p)
    log_a = 3.0 * _log_sinh(eta) - _log_sinhcosh_minus_x(eta)
    pref_a = 32.0 / mu ** 2 * math.exp(log_a)  # S2/S3 prefactor
    ch2 = math.cosh(eta) ** 2
    target = tol / 3.0

    k_need = _k_single_for(p, pref_a, target)
    if k_need > _K_MAX_SINGLE:
        raise ConvergenceError(
            "S3 needs %d roots for tol=%g at h=%g; raise tol" % (k_need, tol, h),
            details={"h": h, "k_needed": k_need})
    roots = _grow_roots(h, max(k_need, default_root_count(p)))
    wphi = _weight_terms(roots.phi, roots.sin_phi, roots.cos_phi)
    csphi = roots.cos_phi ** 2
    x_next = (roots.count + 0.5) * math.pi

    s3_terms = wphi
    s3 = pref_a * float(s3_terms.sum())
    est3 = pref_a * _alternating_tail(p, s3_terms, x_next)

    s2_terms = wphi * (csphi / (csphi + ch2))
    s2 = -pref_a * float(s2_terms.sum())
    est2 = pref_a * _alternating_tail(p, s2_terms, x_next) * (csphi[-1] / (csphi[-1] + ch2))
    if est3 > target or est2 > target:
        raise ConvergenceError(
            "phi sums not certified below %.3e (S3 est %.3e, S2 est %.3e)"
            % (target, est3, est2), details={"h": h, "k": roots.count})

    pref1 = 32.0 / mu ** 2
    cached = {roots.count: roots}

    def make_roots(k):
        if k <= roots.count:
            return roots
        if k not in cached:
            cached[k] = _grow_roots(h, k)
        return cached[k]

    def weights_of(r):
        k = r.count
        w1 = _weight_terms(r.phi, r.sin_phi, r.cos_phi)
        w2 = _weight_terms(r.theta, r.sin_theta, r.cos_theta)
        return w1, r.cos_phi ** 2, w2, r.cos_theta ** 2, 0.0

    s1_sum, est1, k1 = _adaptive_double(h, make_roots, weights_of, pref1, target, 64)
    s1 = pref1 * s1_sum

    return SeriesValue(
        total=s1 + s2 + s3,
        terms={"S1": s1, "S2": s2, "S3": s3},
        truncation_error_estimate=est1 + est2 + est3,
        k_used=max(roots.count, k1))


def einf_inf_series(mu, h, tol=1e-8):
    """Mean time between false alarms E{T_h} with neither sensor changing.

    Evaluates S4 + S5 + S6 for threshold h > 2 and drift mu > 0; same
    tolerance semantics as :func:`e0_inf_series`.
    """
    _check_series_args(mu, h, tol)
    p = 2.0 / h
    eta = _solve_eta(p)
    log_a = 3.0 * _log_sinh(eta) - _log_sinhcosh_minus_x(eta)
    ch2 = math.cosh(eta) ** 2
    target = tol / 3.0

    # S6 entirely in log space: 16/mu^2 * e^{-h} sinh^6 cosh^2 / (sinh cosh - eta)^2
    log_s6 = (math.log(16.0 / mu ** 2) - h + 6.0 * _log_sinh(eta)
              + 2.0 * _log_cosh(eta) - 2.0 * _log_sinhcosh_minus_x(eta))
    if log_s6 > math.log(np.finfo(float).max):
        raise ConvergenceError("e^h overflows float64 at h=%g" % h, details={"h": h})
    s6 = math.exp(log_s6)

    pref5 = 64.0 / mu ** 2 * math.exp(log_a - h)
    k_need = _k_single_for(p, pref5, target)
    roots = _grow_roots(h, min(max(k_need, default_root_count(p)), _K_MAX_SINGLE))
    wtht = _weight_terms(roots.theta, roots.sin_theta, roots.cos_theta)
    cstht = roots.cos_theta ** 2
    x_next = (roots.count + 1.0) * math.pi  # theta_{K+1} lies above (K+1)*pi

    s5_terms = wtht * (ch2 / (cstht + ch2))
    s5 = pref5 * float(s5_terms.sum())
    est5 = pref5 * _alternating_tail(p, s5_terms, x_next)
    if est5 > target:
        raise ConvergenceError(
            "theta sum not certified below %.3e (S5 est %.3e)" % (target, est5),
            details={"h": h, "k": roots.count})

    pref4 = 32.0 / mu ** 2 * math.exp(-h)
    cached = {roots.count: roots}

    def make_roots(k):
        if k <= roots.count:
            return roots
        if k not in cached:
            cached[k] = _grow_roots(h, k)
        return cached[k]

    def weights_of(r):
        w = _weight_terms(r.theta, r.sin_theta, r.cos_theta)
        cs = r.cos_theta ** 2
        return w, cs, w, cs, 0.0

    s4_sum, est4, k4 = _adaptive_double(h, make_roots, weights_of, pref4, target, 64)
    s4 = pref4 * s4_sum

    return SeriesValue(
        total=s4 + s5 + s6,
        terms={"S4": s4, "S5": s5, "S6": s6},
        truncation_error_estimate=est4 + est5,
        k_used=max(roots.count, k4))


def _check_series_args(mu, h, tol):
    if not (mu > 0.0 and math.isfinite(mu)):
        raise ValidationError("mu must be a positive finite real; got %r" % (mu,))
    if not (h > 2.0):
        raise DomainError("series require h > 2; got h=%r" % (h,))
    if h > 700.0:
        raise ValidationError("series evaluation overflows float64 beyond h=700")
    if not (tol > 0.0):
        raise ValidationError("tol must be positive")


def main_terms_general_n(mu, h, n):
    """Leading terms of the N-sensor delay and false-alarm expectations.

    Returns ``((2/mu^2)(h-1), (2/(N mu^2))(e^h + (N-2)h + (2-3N)))`` -- the
    detection-delay and false-alarm main terms, each exact up to
    o(e^{-h/2}).  At N=2 the second reduces to (e^h - 4)/mu^2.
    """
    if not (mu > 0.0):
        raise ValidationError("mu must be positive")
    n = int(n)
    if n < 2:
        raise ValidationError("main terms are defined for n >= 2 sensors")
    if not (h > 2.0):
        raise DomainError("main terms require h > 2; got h=%r" % (h,))
    delay = 2.0 / mu ** 2 * (h - 1.0)
    false_alarm = 2.0 / (n * mu ** 2) * (math.exp(h) + (n - 2.0) * h + (2.0 - 3.0 * n))
    return delay, false_alarm


# ---------------------------------------------------------------------------
# convergence probes
# ---------------------------------------------------------------------------

def _family_by_sign(p, k, sign):
    """Roots of tan x = +p x ('+', theta brackets) or tan x = -p x ('-')."""
    if not (0.0 < p < 1.0):
        raise DomainError("probes require p in (0, 1); got %r" % (p,))
    fam = "theta" if sign == "+" else "phi"
    x, s, c, _, resid = _solve_offsets(p, int(k), fam)
    if resid.max() > 1e-10:
        raise ConvergenceError("root residual %.3e too large" % resid.max())
    return x, s, c


def result1_check(p, sign="+", k=None):
    """Absolute single-sum probe sum_i |sin^3 x_i| cos^2 x_i/(x_i - sin cos).

    For either root family; the limit as p -> 0+ is bounded by 1/pi.
    """
    if k is None:
        k = default_root_count(p)
    x, s, c = _family_by_sign(p, k, sign)
    terms = np.abs(_weight_terms(x, s, c))
    return float(terms.sum())


def result2_check(p, k=None):
    """Signed cross-family double-sum probe; tends to 0 as p -> 0+.

    The summand pairs the tan x = +p x family (index i) with the
    tan x = -p x family (index j) through the kernel
    cos^2 cos^2 / (cos^2 + cos^2); identical in structure to the S1 term.
    """
    if k is None:
        k = default_root_count(p)
    xa, sa, ca = _family_by_sign(p, k, "+")
    xb, sb, cb = _family_by_sign(p, k, "-")
    wa = _weight_terms(xa, sa, ca)
    wb = _weight_terms(xb, sb, cb)
    total, _ = _double_sum(wa, ca ** 2, wb, cb ** 2)
    return total


def term_magnitude_identity(p, i, j, k=None):
    """|a_ij(p)| and its closed form I_p(p a_i, p b_j) * p^2, for tests.

    a is the tan x = +p x family, b the tan x = -p x family; the closed form
    carries (1-p) on the + family and (1+p) on the - family.
    """
    if k is None:
        k = max(default_root_count(p), i + 1, j + 1)
    xa, sa, ca = _family_by_sign(p, k, "+")
    xb, sb, cb = _family_by_sign(p, k, "-")
    wa = _weight_terms(xa, sa, ca)
    wb = _weight_terms(xb, sb, cb)
    a_ij = wa[i] * wb[j] / (ca[i] ** 2 + cb[j] ** 2)
    x, y = p * xa[i], p * xb[j]
    ip = 1.0 / (math.sqrt((1 + x * x) * (1 + y * y)) * (2 + x * x + y * y)
                * (1 + (1 - p) / (x * x)) * (1 + (1 + p) / (y * y)))
    return abs(a_ij), ip * p * p


def ncensors_sum_check(h, n, k=None):
    """Signed cross sum with the N-sensor denominator; vanishes as h grows.

    The denominator carries (N-2)(1 - 4 eta^2/h^2) cos^2 cos^2 in addition
    to the two cos^2 terms; at N=2 this reduces to the plain S1 kernel.
    """
    n = int(n)
    if n < 2:
        raise ValidationError("n >= 2 required")
    if not (h > 2.0):
        raise DomainError("h > 2 required; got %r" % (h,))
    p = 2.0 / h
    if k is None:
        k = default_root_count(p)
    eta = _solve_eta(p)
    extra = (n - 2.0) * (1.0 - (p * eta) ** 2)
    xf, sf, cf = _family_by_sign(p, k, "-")   # phi family
    xt, st, ct = _family_by_sign(p, k, "+")   # theta family
    wf = _weight_terms(xf, sf, cf)
    wt = _weight_terms(xt, st, ct)
    total, _ = _double_sum(wf, cf ** 2, wt, ct ** 2, extra=extra)
    return total
