"""Decentralized quickest change detection with N CUSUM sensors.

A library for the continuous-time Brownian change detection network in which
every sensor runs a local CUSUM rule against a common threshold, announces an
alarm to a fusion center exactly once, and the center declares a change at
the first alarm (the minimal one-shot strategy, equivalent to the centralized
multi-chart CUSUM rule).  The package provides

* exact calibration of single-CUSUM and multi-chart thresholds against a
  required mean time between false alarms (:mod:`mincusum.calibrate`),
* eigenvalue-series evaluation of the two-sensor first-passage expectations
  and general-N leading terms (:mod:`mincusum.series`),
* a reproducible grid simulator of the CUSUM statistics and stopping times
  (:mod:`mincusum.model`),
* an event-level simulation of the one-shot protocol with Monte Carlo
  estimators (:mod:`mincusum.fusion`),
* a command line front end emitting CSV (:mod:`mincusum.cli`).
"""

from .calibrate import (
    BoundsRow,
    Calibration,
    asymptotic_upper,
    bounds_table,
    calibrate,
    default_gamma_grid,
    detection_delay_single,
    mean_false_alarm_single,
    passage_time_factor,
    solve_h,
    solve_nu,
)
from .errors import ConvergenceError, DomainError, MinCusumError, ValidationError
from .fusion import (
    AlarmMessage,
    FusionDecision,
    McEstimate,
    default_horizon,
    estimate_mean_time,
    simulate_protocol,
    worst_case_delay_probe,
)
from .model import (
    CusumState,
    PathConfig,
    Scenario,
    SensorModel,
    StoppingResult,
    cusum_increment,
    generate_increment,
    run_stopping_time,
)
from .series import (
    SeriesValue,
    SpectralRoots,
    e0_inf_series,
    einf_inf_series,
    find_roots,
    main_terms_general_n,
    ncensors_sum_check,
    result1_check,
    result2_check,
)

__version__ = "0.1.0"

__all__ = [
    "AlarmMessage",
    "BoundsRow",
    "Calibration",
    "ConvergenceError",
    "CusumState",
    "DomainError",
    "FusionDecision",
    "McEstimate",
    "MinCusumError",
    "PathConfig",
    "Scenario",
    "SensorModel",
    "SeriesValue",
    "SpectralRoots",
    "StoppingResult",
    "ValidationError",
    "asymptotic_upper",
    "bounds_table",
    "calibrate",
    "cusum_increment",
    "default_gamma_grid",
    "default_horizon",
    "detection_delay_single",
    "e0_inf_series",
    "einf_inf_series",
    "estimate_mean_time",
    "find_roots",
    "generate_increment",
    "main_terms_general_n",
    "mean_false_alarm_single",
    "ncensors_sum_check",
    "passage_time_factor",
    "result1_check",
    "result2_check",
    "run_stopping_time",
    "simulate_protocol",
    "solve_h",
    "solve_nu",
    "worst_case_delay_probe",
]
