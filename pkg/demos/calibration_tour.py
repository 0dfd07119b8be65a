#!/usr/bin/env python3
"""Walk through threshold calibration for a growing false-alarm budget.

For each required mean time between false alarms gamma we solve the
single-CUSUM threshold nu and the two-sensor multi-chart threshold h, then
compare the resulting worst-case detection delays and their large-gamma
expansions.  The detection-delay premium paid for watching two channels
instead of one settles near 2 ln 2 / mu^2.

Run:
    python demos/calibration_tour.py
"""

import math

import numpy as np

from mincusum import (
    asymptotic_upper,
    calibrate,
    detection_delay_single,
    e0_inf_series,
    mean_false_alarm_single,
)

MU = 1.0

print("Calibration tour (mu = %g, N = 2 sensors)" % MU)
print("=" * 78)
print("%10s %9s %9s %12s %12s %10s" % (
    "gamma", "nu", "h", "delay(1)", "delay(2)", "gap"))

for gamma in np.geomspace(1e2, 1e8, 7):
    cal = calibrate(MU, gamma, 2)
    d1 = detection_delay_single(MU, cal.nu)
    d2 = e0_inf_series(MU, cal.h).total
    print("%10.3g %9.4f %9.4f %12.5f %12.5f %10.5f" % (
        gamma, cal.nu, cal.h, d1, d2, d2 - d1))

print()
print("Asymptotic gap: 2 ln 2 / mu^2 = %.6f" % (2.0 / MU ** 2 * math.log(2.0)))
print()

# round-trip sanity: the solved nu reproduces gamma exactly
gamma = 1e4
cal = calibrate(MU, gamma, 2)
back = mean_false_alarm_single(MU, cal.nu)
print("Round trip at gamma=%g: mean false-alarm time back-solves to %.10g" % (gamma, back))

# the two expansions bracket the exact delays at large gamma
up2 = asymptotic_upper(MU, gamma, 2)
up1 = asymptotic_upper(MU, gamma, 1)
print("Expansions at gamma=%g: two-sensor %.5f, single %.5f (difference %.5f)"
      % (gamma, up2, up1, up2 - up1))
