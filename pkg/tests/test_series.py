"""Root solver and expectation-series tests against independent oracles.

Frozen reference values were computed with 40-digit mpmath bisection (roots,
closed forms) and are quoted to full double precision.  The strongest check
is the closed-form identity for the phi-family weight sum,

    sum_i sin^3(phi_i) cos^2(phi_i) / (phi_i - sin phi_i cos phi_i)
        = e^{-h/2} (e^{-h} + h - 1) / 8,

which exercises root placement, trig recovery, and sign conventions at once.
"""

import math

import numpy as np
import pytest

from mincusum.errors import ConvergenceError, DomainError, ValidationError
from mincusum.series import (
    SeriesValue,
    default_root_count,
    e0_inf_series,
    einf_inf_series,
    find_roots,
    main_terms_general_n,
    ncensors_sum_check,
    result1_check,
    result2_check,
    term_magnitude_identity,
)

# mpmath oracles (40 digits, bisection on the defining equations)
ETA_H10 = 4.999545608576162754
THETA1_H10 = 3.790222378292529428
PHI1_H10 = 2.653662399559064410


def phi_weight_sum(roots):
    s, c, x = roots.sin_phi, roots.cos_phi, roots.phi
    return float(((s ** 3) * (c ** 2) / (x - s * c)).sum())


def closed_form_phi_sum(h):
    return math.exp(-h / 2.0) * (math.exp(-h) + h - 1.0) / 8.0


class TestRoots:
    def test_frozen_values_h10(self):
        r = find_roots(10.0, k=5)
        assert r.eta == pytest.approx(ETA_H10, rel=1e-14)
        assert r.theta[0] == pytest.approx(THETA1_H10, rel=1e-14)
        assert r.phi[0] == pytest.approx(PHI1_H10, rel=1e-14)
        # eta is the fixed point of 5 tanh(eta)
        assert r.eta == pytest.approx(5.0 * math.tanh(r.eta), abs=1e-13)

    @pytest.mark.parametrize("h", [4.0, 10.0, 50.0])
    def test_brackets_and_residuals(self, h):
        k = 200
        r = find_roots(h, k=k)
        n = np.arange(1, k + 1)
        assert np.all(r.phi > (n - 0.5) * math.pi)
        assert np.all(r.phi < n * math.pi)
        assert np.all(r.theta > n * math.pi)
        assert np.all(r.theta < (n + 0.5) * math.pi)
        rp, rt, re = r.residuals()
        assert rp.max() <= 1e-12
        assert rt.max() <= 1e-12
        assert re <= 1e-12

    def test_small_p_limit(self):
        # as p -> 0+ the roots collapse onto the tangent zeros n*pi
        r = find_roots(2000.0, k=3)
        n = np.arange(1, 4)
        assert np.all(np.abs(r.theta - n * math.pi) < 0.01)
        assert np.all(np.abs(r.phi - n * math.pi) < 0.01)
        assert np.all(r.theta > n * math.pi)
        assert np.all(r.phi < n * math.pi)

    def test_domain_error_below_two(self):
        with pytest.raises(DomainError):
            find_roots(2.0)
        with pytest.raises(DomainError):
            find_roots(1.5)

    def test_default_count_tracks_support(self):
        assert default_root_count(0.5) == 50
        assert default_root_count(0.01) == 1000

    @pytest.mark.parametrize("h,cap", [(6.0, 5e-3), (10.0, 1e-6),
                                       (14.0, 1e-6), (20.0, 1e-6)])
    def test_eta_threshold_identity(self, h, cap):
        # e^{2 eta - h} = 1 - 4 eta e^{-2 eta} up to o(e^{-3 eta})
        eta = find_roots(h, k=1).eta
        lhs = math.exp(2.0 * eta - h)
        rhs = 1.0 - 4.0 * eta * math.exp(-2.0 * eta)
        assert abs(lhs - rhs) <= cap


class TestPhiSumIdentity:
    @pytest.mark.parametrize("h", [6.0, 10.0, 14.0])
    def test_matches_closed_form(self, h):
        r = find_roots(h, k=20000)
        assert phi_weight_sum(r) == pytest.approx(closed_form_phi_sum(h), rel=1e-8)


class TestExpectationSeries:
    def test_e0_near_asymptote_h10(self):
        sv = e0_inf_series(1.0, 10.0)
        assert isinstance(sv, SeriesValue)
        assert sv.total == pytest.approx(18.0, abs=0.05)
        assert set(sv.terms) == {"S1", "S2", "S3"}
        assert sv.truncation_error_estimate <= 1e-8

    def test_einf_near_asymptote_h10(self):
        sv = einf_inf_series(1.0, 10.0)
        assert sv.total == pytest.approx(math.exp(10.0) - 4.0, rel=1e-3)
        assert set(sv.terms) == {"S4", "S5", "S6"}
        # the closed-form eta term dominates
        assert abs(sv.terms["S6"] - (math.exp(10.0) - 4.0)) < 0.05
        assert sv.terms["S6"] / sv.total > 0.999

    def test_asymptotic_agreement_improves(self):
        e0_gap = [abs(e0_inf_series(1.0, h).total - 2.0 * (h - 1.0))
                  for h in (6.0, 10.0, 14.0)]
        assert e0_gap[0] > e0_gap[1] > e0_gap[2]
        assert e0_gap[2] <= 0.05
        einf_rel = [abs(einf_inf_series(1.0, h).total / (math.exp(h) - 4.0) - 1.0)
                    for h in (6.0, 10.0, 14.0)]
        assert einf_rel[0] > einf_rel[1] > einf_rel[2]
        assert einf_rel[2] <= 1e-3

    def test_vanishing_terms(self):
        for key, fn in (("S1", e0_inf_series), ("S2", e0_inf_series),
                        ("S4", einf_inf_series), ("S5", einf_inf_series)):
            vals = [abs(fn(1.0, h).terms[key]) for h in (6.0, 10.0, 14.0)]
            assert vals[0] > vals[1] > vals[2], key

    @pytest.mark.parametrize("mu", [0.5, 2.0])
    def test_mu_scaling(self, mu):
        for fn in (e0_inf_series, einf_inf_series):
            scaled = fn(mu, 8.0).total
            base = fn(1.0, 8.0).total
            assert scaled == pytest.approx(base / mu ** 2, rel=1e-8)

    def test_truncation_estimate_is_honest(self):
        loose = e0_inf_series(1.0, 6.0, tol=1e-5)
        tight = e0_inf_series(1.0, 6.0, tol=1e-10)
        assert abs(loose.total - tight.total) <= loose.truncation_error_estimate
        assert loose.truncation_error_estimate <= 1e-5
        assert tight.truncation_error_estimate <= 1e-10

    def test_domain_and_validation_errors(self):
        for fn in (e0_inf_series, einf_inf_series):
            with pytest.raises(DomainError):
                fn(1.0, 2.0)
            with pytest.raises(ValidationError):
                fn(-1.0, 6.0)
            with pytest.raises(ValidationError):
                fn(1.0, 6.0, tol=0.0)

    def test_unreachable_tolerance_raises(self):
        with pytest.raises(ConvergenceError):
            e0_inf_series(1.0, 50.0, tol=1e-10)


class TestMainTerms:
    def test_reduces_to_two_sensor_forms(self):
        delay, fa = main_terms_general_n(1.0, 10.0, 2)
        assert delay == pytest.approx(18.0, rel=1e-15)
        assert fa == pytest.approx(math.exp(10.0) - 4.0, rel=1e-15)

    def test_three_sensor_value(self):
        delay, fa = main_terms_general_n(1.0, 10.0, 3)
        assert delay == pytest.approx(18.0, rel=1e-15)
        assert fa == pytest.approx(2.0 / 3.0 * (math.exp(10.0) + 3.0), rel=1e-15)

    def test_mu_scaling_first_component(self):
        delay, _ = main_terms_general_n(2.0, 10.0, 2)
        assert delay == pytest.approx(4.5, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValidationError):
            main_terms_general_n(1.0, 10.0, 1)
        with pytest.raises(DomainError):
            main_terms_general_n(1.0, 1.0, 2)


class TestConvergenceProbes:
    def test_result1_small_p_bound(self):
        assert result1_check(0.01, "+") <= 1.0 / math.pi + 0.02
        assert result1_check(0.01, "-") <= 1.0 / math.pi + 0.02
        assert result1_check(0.005, "+") <= 1.0 / math.pi + 0.02

    @pytest.mark.parametrize("p", [0.5, 0.1])
    @pytest.mark.parametrize("sign", ["+", "-"])
    def test_result1_majorant_dominates_termwise(self, p, sign):
        from mincusum.series import _family_by_sign, _weight_terms
        x, s, c = _family_by_sign(p, 200, sign)
        terms = np.abs(_weight_terms(x, s, c))
        majorant = p / (1.0 + (p * x) ** 2) ** 1.5
        assert np.all(terms <= majorant * (1.0 + 1e-12))

    def test_result1_single_term_consistency(self):
        # first '-' family term at p = 0.2 equals the h=10 phi_1 weight
        r = find_roots(10.0, k=1)
        w1 = abs(r.sin_phi[0] ** 3 * r.cos_phi[0] ** 2
                 / (r.phi[0] - r.sin_phi[0] * r.cos_phi[0]))
        assert result1_check(0.2, "-", k=1) == pytest.approx(w1, rel=1e-13)

    def test_result2_decreases_toward_zero(self):
        vals = [abs(result2_check(p)) for p in (0.2, 0.1, 0.05, 0.02)]
        assert vals[0] > vals[1] > vals[2] > vals[3]

    def test_result2_term_identity(self):
        got, closed = term_magnitude_identity(0.2, 1, 1)
        assert got == pytest.approx(closed, rel=1e-12)
        got, closed = term_magnitude_identity(0.35, 0, 2)
        assert got == pytest.approx(closed, rel=1e-12)

    def test_result2_kernel_bounded_by_l1_envelope(self):
        # I_p(x, y) <= B(x, y) = 1/(sqrt((1+x^2)(1+y^2)) (2+x^2+y^2))
        p = 0.2
        for x, y in ((0.5, 0.5), (1.0, 3.0), (4.0, 0.2)):
            ip = 1.0 / (math.sqrt((1 + x * x) * (1 + y * y)) * (2 + x * x + y * y)
                        * (1 + (1 - p) / (x * x)) * (1 + (1 + p) / (y * y)))
            b = 1.0 / (math.sqrt((1 + x * x) * (1 + y * y)) * (2 + x * x + y * y))
            assert ip <= b

    def test_ncensors_reduces_to_cross_sum_at_two(self):
        h = 10.0
        k = 400
        assert ncensors_sum_check(h, 2, k=k) == pytest.approx(
            result2_check(2.0 / h, k=k), rel=1e-12)

    def test_ncensors_decreasing_in_h(self):
        vals = [abs(ncensors_sum_check(h, 3)) for h in (6.0, 10.0, 14.0)]
        assert vals[0] > vals[1] > vals[2]

    def test_n_sensor_terms_dominated_by_two_sensor_terms(self):
        # the extra nonnegative denominator term only shrinks magnitudes
        from mincusum.series import _family_by_sign, _solve_eta, _weight_terms
        h, n = 8.0, 4
        p = 2.0 / h
        eta = _solve_eta(p)
        extra = (n - 2.0) * (1.0 - (p * eta) ** 2)
        assert extra > 0.0
        xf, sf, cf = _family_by_sign(p, 8, "-")
        xt, st, ct = _family_by_sign(p, 8, "+")
        wf, wt = _weight_terms(xf, sf, cf), _weight_terms(xt, st, ct)
        for i in (0, 3, 7):
            for j in (0, 4, 7):
                denom2 = cf[i] ** 2 + ct[j] ** 2
                denom_n = denom2 + extra * cf[i] ** 2 * ct[j] ** 2
                a2 = abs(wf[i] * wt[j]) / denom2
                an = abs(wf[i] * wt[j]) / denom_n
                assert an <= a2
