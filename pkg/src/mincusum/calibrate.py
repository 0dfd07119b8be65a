"""Threshold calibration and closed-form performance of CUSUM rules.

For a single sensor with post-change drift mu, the CUSUM rule with threshold
nu has mean time between false alarms (2/mu^2) * g(nu) and worst-case
detection delay (2/mu^2) * g(-nu), where g(x) = e^x - x - 1.  For N sensors
running the multi-chart rule (stop when any statistic reaches h), h is
calibrated so the all-quiet expectation equals the required mean time between
false alarms gamma; the two-sensor expectation is evaluated exactly by the
eigenvalue series, N > 2 by its leading term.

``bounds_table`` produces the sandwich around the unattainable optimal delay:
the multi-chart delay from above, the single-sensor delay from below.  The
gap stays bounded as gamma grows, with asymptotic width (2/mu^2) log N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, ValidationError
from .series import e0_inf_series, einf_inf_series, main_terms_general_n

__all__ = [
    "Calibration",
    "BoundsRow",
    "passage_time_factor",
    "mean_false_alarm_single",
    "detection_delay_single",
    "solve_nu",
    "solve_h",
    "asymptotic_upper",
    "bounds_table",
    "calibrate",
    "default_gamma_grid",
]

# smallest threshold the h-solver will bracket from; below this the series
# domain (h > 2) is violated and calibration must fall back to simulation
_H_FLOOR = 2.0 + 1e-6


def passage_time_factor(nu):
    """e^nu - nu - 1: first-passage time of a CUSUM in units of 2/mu^2.

    Evaluated at +nu it gives the zero-drift (false alarm) scale, at -nu the
    post-change (detection delay) scale.  Strictly convex with minimum 0 at 0.
    """
    if abs(nu) < 0.01:
        # expm1(nu) - nu cancels catastrophically near 0; sum the series
        return 0.5 * nu * nu * (1.0 + nu / 3.0 * (1.0 + nu / 4.0 * (
            1.0 + nu / 5.0 * (1.0 + nu / 6.0 * (1.0 + nu / 7.0 * (1.0 + nu / 8.0))))))
    return math.expm1(nu) - nu


def mean_false_alarm_single(mu, nu):
    """Mean time between false alarms of one CUSUM at threshold nu."""
    _require_positive_mu(mu)
    return 2.0 / mu ** 2 * passage_time_factor(nu)


def detection_delay_single(mu, nu):
    """Worst-case detection delay of one CUSUM at threshold nu > 0."""
    _require_positive_mu(mu)
    return 2.0 / mu ** 2 * passage_time_factor(-nu)


def solve_nu(mu, gamma):
    """Threshold nu > 0 with mean false-alarm time exactly gamma.

    Solves (2/mu^2)(e^nu - nu - 1) = gamma to relative residual <= 1e-12 by
    a bracketed Brent solve plus Newton polish.
    """
    _require_positive_mu(mu)
    if not (gamma > 0.0 and math.isfinite(gamma)):
        raise ValidationError("gamma must be a positive finite real; got %r" % (gamma,))
    target = 0.5 * mu ** 2 * gamma
    hi = max(1.0, math.log(target + 2.0) + 1.0)
    nu = brentq(lambda v: passage_time_factor(v) - target, 0.0, hi,
                xtol=1e-300, rtol=4 * np.finfo(float).eps)
    for _ in range(2):  # Newton polish: d/dnu = e^nu - 1
        fp = math.expm1(nu)
        if fp <= 0.0:
            break
        nu -= (passage_time_factor(nu) - target) / fp
    resid = abs(passage_time_factor(nu) - target) / target
    if resid > 1e-12:
        raise ConvergenceError(
            "nu solve residual %.3e exceeds 1e-12" % resid,
            details={"mu": mu, "gamma": gamma, "nu": nu})
    return nu


def _einf_expectation(mu, h, n, series_tol):
    """All-quiet mean stopping time of the N-chart rule at threshold h."""
    if n == 2:
        return einf_inf_series(mu, h, tol=series_tol).total
    return main_terms_general_n(mu, h, n)[1]


def solve_h(mu, gamma, n, series_tol=None):
    """Multi-chart threshold h with all-quiet mean stopping time gamma.

    n=1 reduces to :func:`solve_nu`; n=2 inverts the exact two-sensor series;
    n>2 inverts the leading-term expression (documented o(1) caveat).  The
    returned h satisfies the constraint to relative residual <= 1e-9.
    """
    _require_positive_mu(mu)
    n = int(n)
    if n < 1:
        raise ValidationError("sensor count must be >= 1")
    if not (gamma > 0.0 and math.isfinite(gamma)):
        raise ValidationError("gamma must be a positive finite real; got %r" % (gamma,))
    if n == 1:
        return solve_nu(mu, gamma)
    if series_tol is None:
        series_tol = max(1e-12, 1e-10 * gamma)

    floor_value = _einf_expectation(mu, _H_FLOOR, n, series_tol)
    if gamma <= floor_value:
        raise DomainError(
            "gamma=%g is below the h->2 limit %.6g of the series domain; "
            "calibrate by simulation instead" % (gamma, floor_value))

    hi = max(_H_FLOOR + 0.5, math.log(max(n * mu ** 2 * gamma / 2.0, 8.0)) + 2.0)
    while _einf_expectation(mu, hi, n, series_tol) < gamma:
        hi += 2.0
        if hi > 700.0:
            raise ConvergenceError("no bracket for h below overflow limit",
                                   details={"gamma": gamma, "mu": mu, "n": n})
    h = brentq(lambda x: _einf_expectation(mu, x, n, series_tol) - gamma,
               _H_FLOOR, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    resid = abs(_einf_expectation(mu, h, n, max(1e-12, 1e-11 * gamma)) - gamma) / gamma
    if resid > 1e-9:
        raise ConvergenceError(
            "h solve residual %.3e exceeds 1e-9" % resid,
            details={"mu": mu, "gamma": gamma, "n": n, "h": h})
    return h


def asymptotic_upper(mu, gamma, n):
    """Large-gamma expansion (2/mu^2)[log gamma + log(N mu^2/2) - 1].

    For n=1 this is the single-CUSUM delay expansion; the difference between
    n and 1 at equal gamma is (2/mu^2) log n, the guaranteed gap bound.
    """
    _require_positive_mu(mu)
    n = int(n)
    if n < 1:
        raise ValidationError("sensor count must be >= 1")
    if not (gamma > 0.0):
        raise ValidationError("gamma must be positive")
    value = math.log(gamma) + math.log(n * mu ** 2 / 2.0) - 1.0
    if value <= 0.0:
        raise ValidationError(
            "gamma=%g too small for the asymptotic expansion (value %.3g <= 0)"
            % (gamma, value))
    return 2.0 / mu ** 2 * value


@dataclass(frozen=True)
class Calibration:
    """Thresholds calibrated to a required mean time between false alarms."""

    mu: float
    gamma: float
    n_sensors: int
    nu: float
    h: float


def calibrate(mu, gamma, n, series_tol=None):
    """Solve both thresholds (single-CUSUM nu, multi-chart h) for gamma."""
    nu = solve_nu(mu, gamma)
    h = nu if int(n) == 1 else solve_h(mu, gamma, n, series_tol=series_tol)
    return Calibration(mu=float(mu), gamma=float(gamma), n_sensors=int(n), nu=nu, h=h)


@dataclass(frozen=True)
class BoundsRow:
    """One point of the delay sandwich: upper/lower bounds and their gap.

    ``method`` records how the upper bound was computed: 'series' (exact
    two-sensor expansion), 'main-term' (N>2 leading term) or 'single'
    (N=1, where both bounds coincide).
    """

    gamma: float
    upper: float
    lower: float
    gap: float
    method: str


def default_gamma_grid(lo=1e2, hi=1e6, num=50):
    """Log-spaced grid matching the usual log-scale presentation."""
    return np.geomspace(lo, hi, num)


def bounds_table(mu, n, gamma_grid, series_tol=None):
    """Delay sandwich rows for each gamma in an ascending grid.

    upper = multi-chart worst-case delay at the calibrated h (series for
    N=2, leading term for N>2), lower = single-CUSUM delay at the calibrated
    nu.  Solver or series failures are re-raised with the row index.
    """
    _require_positive_mu(mu)
    n = int(n)
    grid = np.asarray(gamma_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("gamma_grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) <= 0.0):
        raise ValidationError("gamma_grid must be strictly ascending")
    rows = []
    for i, gamma in enumerate(grid):
        try:
            nu = solve_nu(mu, gamma)
            lower = detection_delay_single(mu, nu)
            if n == 1:
                upper, method = lower, "single"
            else:
                h = solve_h(mu, gamma, n, series_tol=series_tol)
                if n == 2:
                    upper = e0_inf_series(mu, h).total
                    method = "series"
                else:
                    upper = main_terms_general_n(mu, h, n)[0]
                    method = "main-term"
        except (ValidationError, ConvergenceError) as exc:
            raise type(exc)("row %d (gamma=%g): %s" % (i, gamma, exc)) from exc
        if upper < lower - 1e-9 * max(1.0, abs(lower)):
            raise ConvergenceError(
                "row %d (gamma=%g): upper bound %.12g fell below lower %.12g"
                % (i, gamma, upper, lower))
        rows.append(BoundsRow(gamma=float(gamma), upper=float(upper),
                              lower=float(lower), gap=float(upper - lower),
                              method=method))
    return rows


def _require_positive_mu(mu):
    if not (mu > 0.0 and math.isfinite(mu)):
        raise ValidationError("mu must be a positive finite real; got %r" % (mu,))
