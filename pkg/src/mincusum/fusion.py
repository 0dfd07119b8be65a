"""Event-level simulation of the one-shot decentralized protocol.

Every sensor runs its own CUSUM locally and sends a single message to the
fusion center at the moment its statistic first reaches the threshold; the
center declares a change at the first message received (minimal strategy).
On any fixed noise stream this reproduces the centralized multi-chart
stopping time exactly, which is the identity the protocol's optimality rests
on; ``simulate_protocol`` keeps the messages as explicit data so the one-shot
structure is a testable artifact, while ``estimate_mean_time`` uses the fused
kernel directly for Monte Carlo work.

Replications are independent: noise streams are keyed by (seed, replication,
sensor id), so results do not depend on execution order or batching, and
repeated runs with the same configuration are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _rng
from .calibrate import mean_false_alarm_single, passage_time_factor
from .errors import ConvergenceError, ValidationError
from .model import (
    Scenario,
    _as_arrays,
    _fused_crossing_batch,
    _grid_steps,
    _single_crossing,
)
from .series import einf_inf_series, main_terms_general_n

__all__ = [
    "AlarmMessage",
    "FusionDecision",
    "McEstimate",
    "simulate_protocol",
    "estimate_mean_time",
    "worst_case_delay_probe",
    "default_horizon",
]

_BATCH = 512  # replications per jitted batch call


@dataclass(frozen=True)
class AlarmMessage:
    """The single message a sensor ever sends: its id and alarm time."""

    sensor: int
    time: float


@dataclass(frozen=True)
class FusionDecision:
    """The center's declaration: earliest alarm, or censored at the horizon."""

    time: float
    first_sensor: int | None
    censored: bool


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean over uncensored replications with its standard error."""

    mean: float
    std_error: float
    n_effective: int
    n_censored: int


def simulate_protocol(sensors, scenario, h, cfg):
    """One replication of the protocol: per-sensor alarms, fused decision.

    Each sensor is run to its own first crossing (or the horizon) on its own
    noise stream and contributes at most one AlarmMessage.  The decision time
    is the earliest message, ties resolved to the lowest sensor position --
    identical, path by path, to ``run_stopping_time`` on the same streams.
    """
    if not (h > 0.0 and math.isfinite(h)):
        raise ValidationError("threshold h must be a positive finite real")
    ids, mus, taus = _as_arrays(sensors, scenario)
    max_steps = _grid_steps(cfg)
    wi, ki, fi, _ = _rng.ziggurat_tables()
    messages = []
    first = None
    for i in range(len(sensors)):
        state = np.uint64(_rng.stream_state(cfg.seed, cfg.rep_index, ids[i]))
        steps = _single_crossing(state, mus[i], taus[i], cfg.dt, h, max_steps, wi, ki, fi)
        if steps > 0:
            msg = AlarmMessage(sensor=int(ids[i]), time=steps * cfg.dt)
            messages.append(msg)
            if first is None or msg.time < first.time:
                first = msg
    if first is None:
        return messages, FusionDecision(time=cfg.horizon, first_sensor=None, censored=True)
    return messages, FusionDecision(time=first.time, first_sensor=first.sensor, censored=False)


def _simulate_reps(sensors, scenario, h, cfg, reps):
    """Fused crossing steps and sensor positions for reps replications.

    Returns (steps, positions) int64 arrays indexed by replication offset;
    steps == 0 marks a censored replication.
    """
    if not (h > 0.0 and math.isfinite(h)):
        raise ValidationError("threshold h must be a positive finite real")
    ids, mus, taus = _as_arrays(sensors, scenario)
    max_steps = _grid_steps(cfg)
    wi, ki, fi, _ = _rng.ziggurat_tables()
    steps = np.empty(reps, dtype=np.int64)
    pos = np.empty(reps, dtype=np.int64)
    done = 0
    while done < reps:
        n = min(_BATCH, reps - done)
        s, p = _fused_crossing_batch(
            _rng._mask64(cfg.seed), _rng._mask64(cfg.rep_index + done),
            n, ids, mus, taus, cfg.dt, h, max_steps, wi, ki, fi)
        steps[done:done + n] = s
        pos[done:done + n] = p
        done += n
    return steps, pos


def estimate_mean_time(sensors, scenario, h, cfg, reps):
    """Monte Carlo estimate of the mean fused stopping time.

    Censored replications (no crossing before the horizon) are excluded from
    the mean and counted in ``n_censored``.  Deterministic given cfg.seed.
    """
    reps = int(reps)
    if reps < 100:
        raise ValidationError("reps must be >= 100 for a meaningful estimate")
    steps, _ = _simulate_reps(sensors, scenario, h, cfg, reps)
    return _estimate_from_steps(steps, cfg.dt)


def _estimate_from_steps(steps, dt):
    crossed = steps[steps > 0]
    n_eff = int(crossed.size)
    n_cens = int(steps.size - n_eff)
    if n_eff == 0:
        return McEstimate(mean=math.nan, std_error=math.nan,
                          n_effective=0, n_censored=n_cens)
    times = crossed.astype(np.float64) * dt
    mean = float(times.mean())
    if n_eff > 1:
        se = float(times.std(ddof=1) / math.sqrt(n_eff))
    else:
        se = math.nan
    return McEstimate(mean=mean, std_error=se, n_effective=n_eff, n_censored=n_cens)


def worst_case_delay_probe(sensors, h, cfg, reps):
    """Delay estimate for a change at time 0 at one sensor, others quiet.

    Runs the scenario with the change at position 0 and, by symmetry, every
    permuted position (on decorrelated replication ranges), asserting the
    estimates agree within 3 joint standard errors.  Requires equal drifts.
    """
    mus = [s.mu for s in sensors]
    if any(abs(m - mus[0]) > 1e-12 * max(1.0, mus[0]) for m in mus):
        raise ValidationError(
            "the permutation-symmetry probe requires equal sensor drifts")
    n = len(sensors)
    reps = int(reps)
    estimates = []
    for position in range(n):
        # decorrelate the permuted runs by shifting the replication range
        shifted = replace(cfg, rep_index=cfg.rep_index + position * reps)
        est = estimate_mean_time(
            sensors, Scenario.worst_case(n, position), h, shifted, reps)
        estimates.append(est)
    base = estimates[0]
    for position in range(1, n):
        other = estimates[position]
        joint = math.hypot(base.std_error, other.std_error)
        if abs(base.mean - other.mean) > 3.0 * joint:
            raise ConvergenceError(
                "permutation symmetry violated: position 0 mean %.6g vs "
                "position %d mean %.6g (3 sigma = %.3g)"
                % (base.mean, position, other.mean, 3.0 * joint),
                details={"means": [e.mean for e in estimates]})
    return base


def default_horizon(sensors, scenario, h):
    """A horizon long enough that censoring is statistically negligible.

    All-quiet scenarios get 20x the analytic mean time between false alarms
    (censoring mass below 1e-6 for the near-exponential passage law); any
    scenario with a finite change time gets 50x an upper bound on the mean
    delay, tau_min + min over changed sensors of the single-CUSUM delay scale.
    """
    ids, mus, taus = _as_arrays(sensors, scenario)
    n = len(sensors)
    if not scenario.at_least_one_finite:
        if n == 1:
            ref = mean_false_alarm_single(mus[0], h)
        elif n == 2:
            ref = einf_inf_series(float(mus.min()), h).total
        else:
            ref = main_terms_general_n(float(mus.min()), h, n)[1]
        return 20.0 * ref
    finite = [i for i in range(n) if math.isfinite(taus[i])]
    tau_min = min(taus[i] for i in finite)
    # a changed sensor crosses no later (in mean) than from a fresh start
    delay = min(2.0 / mus[i] ** 2 * passage_time_factor(-h) for i in finite)
    return 50.0 * (tau_min + delay)
