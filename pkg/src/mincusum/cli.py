"""Command line front end: calibrate, series, simulate, bounds.

Thin adapters around the library -- no numerical logic lives here.  All
commands emit CSV (header row, comma separated, LF line endings, floats at 12
significant digits) to --out or stdout.  Exit codes: 0 success, 2 validation
error, 3 numerical non-convergence.

Flags can be preloaded from a config file of ``key = value`` lines (``#``
comments allowed); explicit flags override file values.  Infinite change
points are written as the literal ``inf``.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from .calibrate import (
    asymptotic_upper,
    bounds_table,
    calibrate,
    detection_delay_single,
    solve_nu,
)
from .errors import ConvergenceError, MinCusumError, ValidationError
from .fusion import default_horizon, _estimate_from_steps, _simulate_reps
from .model import PathConfig, Scenario, SensorModel
from .series import e0_inf_series, einf_inf_series, main_terms_general_n

_FMT = "%.12g"

_CONFIG_KEYS = {
    "mu", "gamma", "sensors", "h", "nu", "tau", "dt", "horizon", "seed",
    "reps", "tol", "out", "which", "gamma_grid", "per_rep",
}


def _fmt(x):
    return _FMT % x


def _parse_float(text, key):
    try:
        return float(text)
    except ValueError:
        raise ValidationError("%s: not a number: %r" % (key, text))


def _parse_int(text, key):
    try:
        return int(text)
    except ValueError:
        raise ValidationError("%s: not an integer: %r" % (key, text))


def _parse_taus(text):
    """Comma list of change points; the literal 'inf' marks no change."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if part == "inf":
            out.append(math.inf)
        else:
            out.append(_parse_float(part, "tau"))
    return tuple(out)


def _parse_mus(text):
    return tuple(_parse_float(p.strip(), "mu") for p in text.split(","))


def _parse_grid(text):
    """Grid syntax A:B:Nlog (log spaced) or A:B:Nlin (linearly spaced)."""
    parts = text.split(":")
    if len(parts) != 3 or not (parts[2].endswith("log") or parts[2].endswith("lin")):
        raise ValidationError("grid must look like A:B:50log or A:B:50lin; got %r" % text)
    lo = _parse_float(parts[0], "grid start")
    hi = _parse_float(parts[1], "grid end")
    num = _parse_int(parts[2][:-3], "grid count")
    if num < 2 or not (0 < lo < hi):
        raise ValidationError("grid needs 0 < A < B and at least 2 points")
    if parts[2].endswith("log"):
        return np.geomspace(lo, hi, num)
    return np.linspace(lo, hi, num)


def _load_config(path):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError("%s:%d: expected key=value" % (path, lineno))
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ValidationError("%s:%d: unknown key %r" % (path, lineno, key))
            values[key] = value.strip()
    return values


def _merged(args, key, convert, default=None):
    """Flag value if given, else config-file value, else default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return convert(flag, key) if convert else flag
    cfg = getattr(args, "_config_values", {})
    if key in cfg:
        value = cfg[key]
        return convert(value, key) if convert else value
    return default


def _open_out(args):
    path = _merged(args, "out", None)
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit(args, header, rows):
    fh, close = _open_out(args)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _cmd_calibrate(args):
    mu = _merged(args, "mu", _parse_float)
    gamma = _merged(args, "gamma", _parse_float)
    n = _merged(args, "sensors", _parse_int, 1)
    if mu is None or gamma is None:
        raise ValidationError("calibrate requires --mu and --gamma")
    cal = calibrate(mu, gamma, n)
    delay_single = detection_delay_single(mu, cal.nu)
    if n == 1:
        delay_multi, method = delay_single, "single"
    elif n == 2:
        delay_multi, method = e0_inf_series(mu, cal.h).total, "series"
    else:
        delay_multi, method = main_terms_general_n(mu, cal.h, n)[0], "main-term"
    if method == "main-term":
        print("note: sensors=%d uses the main-term approximation of the "
              "multi-chart delay" % n, file=sys.stderr)

    def _asymp(k):
        try:
            return asymptotic_upper(mu, gamma, k)
        except ValidationError:
            return math.nan

    gap_bound = 2.0 / mu ** 2 * math.log(n)
    header = ["mu", "gamma", "sensors", "nu", "h", "delay_single",
              "delay_multichart", "asymp_multichart", "asymp_single",
              "gap_bound", "method"]
    row = [_fmt(mu), _fmt(gamma), str(n), _fmt(cal.nu), _fmt(cal.h),
           _fmt(delay_single), _fmt(delay_multi), _fmt(_asymp(n)),
           _fmt(_asymp(1)), _fmt(gap_bound), method]
    _emit(args, header, [row])
    return 0


def _cmd_series(args):
    mu = _merged(args, "mu", _parse_float, 1.0)
    which = _merged(args, "which", None)
    h_text = _merged(args, "h", None)
    tol = _merged(args, "tol", _parse_float, 1e-8)
    if which not in ("e0", "einf"):
        raise ValidationError("series requires --which e0|einf")
    if h_text is None:
        raise ValidationError("series requires --h")
    h_values = [_parse_float(p.strip(), "h") for p in str(h_text).split(",")]
    rows = []
    if which == "e0":
        header = ["h", "S1", "S2", "S3", "total", "truncation_estimate"]
        for h in h_values:
            sv = e0_inf_series(mu, h, tol=tol)
            rows.append([_fmt(h), _fmt(sv.terms["S1"]), _fmt(sv.terms["S2"]),
                         _fmt(sv.terms["S3"]), _fmt(sv.total),
                         _fmt(sv.truncation_error_estimate)])
    else:
        header = ["h", "S4", "S5", "S6", "total", "truncation_estimate"]
        for h in h_values:
            sv = einf_inf_series(mu, h, tol=tol)
            rows.append([_fmt(h), _fmt(sv.terms["S4"]), _fmt(sv.terms["S5"]),
                         _fmt(sv.terms["S6"]), _fmt(sv.total),
                         _fmt(sv.truncation_error_estimate)])
    _emit(args, header, rows)
    return 0


def _cmd_simulate(args):
    h = _merged(args, "h", _parse_float)
    tau_text = _merged(args, "tau", None)
    if h is None or tau_text is None:
        raise ValidationError("simulate requires --h and --tau")
    taus = _parse_taus(str(tau_text))
    n = len(taus)
    mus = _merged(args, "mu", lambda t, k: _parse_mus(str(t)), (1.0,))
    if len(mus) == 1:
        mus = mus * n
    if len(mus) != n:
        raise ValidationError("got %d drifts for %d sensors" % (len(mus), n))
    dt = _merged(args, "dt", _parse_float, 1e-3)
    reps = _merged(args, "reps", _parse_int, 1000)
    seed = _merged(args, "seed", _parse_int, 0)
    sensors = [SensorModel(id=i + 1, mu=m) for i, m in enumerate(mus)]
    scenario = Scenario(taus)
    horizon = _merged(args, "horizon", _parse_float)
    if horizon is None:
        horizon = default_horizon(sensors, scenario, h)
    cfg = PathConfig(dt=dt, horizon=horizon, seed=seed)
    steps, pos = _simulate_reps(sensors, scenario, h, cfg, reps)
    est = _estimate_from_steps(steps, dt)
    _emit(args, ["estimate", "std_error", "n_censored"],
          [[_fmt(est.mean), _fmt(est.std_error), str(est.n_censored)]])
    per_rep = _merged(args, "per_rep", None)
    if per_rep is not None:
        with open(per_rep, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rep", "time", "sensor", "censored"])
            for r in range(reps):
                censored = steps[r] == 0
                time = horizon if censored else steps[r] * dt
                sensor = "" if censored else str(sensors[pos[r]].id)
                writer.writerow([str(r), _fmt(time), sensor, "1" if censored else "0"])
    return 0


def _cmd_bounds(args):
    mu = _merged(args, "mu", _parse_float)
    n = _merged(args, "sensors", _parse_int, 2)
    grid_text = _merged(args, "gamma_grid", None, "1e2:1e6:50log")
    if mu is None:
        raise ValidationError("bounds requires --mu")
    grid = _parse_grid(str(grid_text))
    rows = bounds_table(mu, n, grid)
    if rows and rows[0].method == "main-term":
        print("note: sensors=%d upper bounds use the main-term approximation"
              % n, file=sys.stderr)
    _emit(args, ["gamma", "upper", "lower", "gap"],
          [[_fmt(r.gamma), _fmt(r.upper), _fmt(r.lower), _fmt(r.gap)] for r in rows])
    return 0


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--tol", help="numerical tolerance where applicable")
    common.add_argument("--seed", help="noise stream seed (simulate)")
    common.add_argument("--config", help="key=value config file; flags override")

    parser = argparse.ArgumentParser(
        prog="mincusum",
        description="Decentralized quickest change detection with N CUSUM sensors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", parents=[common],
                       help="solve thresholds for a required false-alarm time")
    p.add_argument("--mu")
    p.add_argument("--gamma")
    p.add_argument("--sensors")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("series", parents=[common],
                       help="evaluate the first-passage expectation series")
    p.add_argument("--mu")
    p.add_argument("--h")
    p.add_argument("--which", choices=["e0", "einf"])
    p.set_defaults(func=_cmd_series)

    p = sub.add_parser("simulate", parents=[common],
                       help="Monte Carlo estimate of the fused stopping time")
    p.add_argument("--mu")
    p.add_argument("--h")
    p.add_argument("--tau")
    p.add_argument("--reps")
    p.add_argument("--dt")
    p.add_argument("--horizon")
    p.add_argument("--per-rep", dest="per_rep")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bounds", parents=[common],
                       help="delay sandwich table over a gamma grid")
    p.add_argument("--mu")
    p.add_argument("--sensors")
    p.add_argument("--gamma-grid", dest="gamma_grid")
    p.set_defaults(func=_cmd_bounds)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args._config_values = _load_config(args.config) if args.config else {}
        return args.func(args)
    except ValidationError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except MinCusumError as exc:  # pragma: no cover - safety net
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
