import math

import pytest
import numpy as np
from scipy.special import zeta

from src.tower.spectrum import MassTower
from src.tower.series import SumStatus, Tristate
from src.tower.criteria import (
    counting_integral_identity_check,
    classify_nuclearity,
    nuclearity_index_bounds,
    index_bounds_profile,
    tauberian_counting_bound,
    tauberian_log_raw,
    minimize_tauberian,
    tauberian_constants,
    local_normality_verdict,
    probe_grid,
    fit_power_law,
)
from src.utils.errors import ValidationError, NumericError


@pytest.fixture(scope="module")
def arithmetic():
    return MassTower.arithmetic(1.0)


@pytest.fixture(scope="module")
def logarithmic():
    return MassTower.logarithmic(1.0)


class TestCountingIdentity:
    def test_arithmetic(self, arithmetic):
        check = counting_integral_identity_check(arithmetic, 4.0)
        assert check.residual < 1e-6
        assert check.integral == pytest.approx(1.0 / (math.e - 1.0), abs=1e-10)

    def test_two_term_finite_tower(self):
        tower = MassTower.finite([1.0, 2.0])
        check = counting_integral_identity_check(tower, 1.0)
        expected = math.exp(-0.25) + math.exp(-0.5)
        assert check.series.value == pytest.approx(expected, rel=1e-15)
        assert check.integral == pytest.approx(expected, rel=1e-13)

    def test_logarithmic_divergent_G_reported(self, logarithmic):
        """At beta = 8 d0 the series is harmonic and has no identity to check."""
        check = counting_integral_identity_check(logarithmic, 8.0)
        assert check.divergent
        assert check.status is SumStatus.DIVERGENT
        assert math.isnan(check.residual)

    def test_logarithmic_convergent(self, logarithmic):
        check = counting_integral_identity_check(logarithmic, 16.0)
        assert check.residual < 1e-5
        assert check.integral == pytest.approx(zeta(2.0) - 1.0, abs=1e-5)

    def test_small_beta_arithmetic(self):
        tower = MassTower.arithmetic(0.5)
        check = counting_integral_identity_check(tower, 0.05)
        assert check.residual < 1e-6 * check.series.value

    def test_rejects_nonpositive_beta(self, arithmetic):
        with pytest.raises(ValidationError, match="beta must be positive"):
            counting_integral_identity_check(arithmetic, 0.0)


class TestClassifyNuclearity:
    def test_arithmetic_sufficient(self, arithmetic):
        verdict = classify_nuclearity(arithmetic)
        assert verdict.sufficient_holds is Tristate.YES
        assert verdict.necessary_holds is Tristate.YES
        # G ~ 4/beta for small beta
        assert verdict.fits["G"].exponent == pytest.approx(1.0, abs=0.05)
        assert verdict.exponents['n'] == pytest.approx(5.0, abs=0.05)
        assert verdict.exponents['beta0'] > 0

    def test_logarithmic_necessary_fails(self, logarithmic):
        verdict = classify_nuclearity(logarithmic)
        assert verdict.necessary_holds is Tristate.NO
        assert verdict.sufficient_holds is Tristate.NO
        assert verdict.exponents is None

    def test_finite_tower(self):
        verdict = classify_nuclearity(MassTower.finite([1.0, 2.0, 3.0]))
        assert verdict.necessary_holds is Tristate.YES
        assert verdict.sufficient_holds is Tristate.YES

    def test_custom_without_bound_undetermined(self):
        verdict = classify_nuclearity(MassTower.custom([1.0, 2.0]))
        assert verdict.necessary_holds is Tristate.UNDETERMINED
        assert verdict.sufficient_holds is Tristate.UNDETERMINED

    def test_probe_grid(self):
        grid = probe_grid(MassTower.arithmetic(2.0))
        assert len(grid) == 13
        assert grid[0] == pytest.approx(5e-4)
        assert grid[-1] == pytest.approx(0.5)

    def test_verdict_serialization(self, arithmetic):
        record = classify_nuclearity(arithmetic).to_dict()
        assert record['sufficient_holds'] == "yes"
        assert set(record['fits']) == {"F", "F_small_beta", "G", "G_small_beta"}


def test_power_law_fit_exact():
    betas = np.logspace(-3, 0, 7)
    fit = fit_power_law(betas, 3.0 * betas ** -2)
    assert fit.exponent == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.rms_residual < 1e-12


class TestIndexBounds:
    def test_single_field_exact_upper(self):
        bounds = nuclearity_index_bounds(MassTower.finite([1.0]), R=2.0, beta=1.0)
        expected = 8.0 * abs(math.log(1.0 - math.exp(-0.5)))
        assert bounds.log_upper_exact == pytest.approx(expected, rel=1e-14)
        assert bounds.upper_exact == pytest.approx(math.exp(expected), rel=1e-13)

    def test_single_field_lower(self):
        bounds = nuclearity_index_bounds(MassTower.finite([1.0]), R=2.0, beta=1.0, C_lower=1.0)
        assert bounds.lower == pytest.approx(math.exp(-2.0), rel=1e-14)

    def test_simplified_bound_tends_to_one(self, arithmetic):
        values = [nuclearity_index_bounds(arithmetic, 2.0, b).upper_simplified for b in (1.0, 4.0, 16.0, 64.0)]
        assert all(later < earlier for earlier, later in zip(values, values[1:]))
        assert values[-1] == pytest.approx(1.0, abs=1e-8)
        assert values[-1] >= 1.0

    def test_radius_hypothesis(self, arithmetic):
        with pytest.raises(ValidationError, match="must exceed 1/m1"):
            nuclearity_index_bounds(arithmetic, R=1.0, beta=1.0)

    def test_divergent_lower_bound_is_infinite(self, logarithmic):
        bounds = nuclearity_index_bounds(logarithmic, R=5.0, beta=0.4)
        assert bounds.log_lower == math.inf
        assert bounds.lower == math.inf

    def test_overflow_reported_as_infinity(self, arithmetic):
        bounds = nuclearity_index_bounds(arithmetic, R=10.0, beta=0.01)
        assert bounds.upper_simplified == math.inf
        assert math.isfinite(bounds.log_upper_simplified)

    def test_profile_nonincreasing(self, arithmetic):
        profile = index_bounds_profile(arithmetic, 2.0, [2.0, 0.5, 1.0, 4.0])
        assert [b.beta for b in profile] == [0.5, 1.0, 2.0, 4.0]

    def test_profile_detects_increase(self, arithmetic, mocker):
        from src.tower import criteria
        real = criteria.nuclearity_index_bounds
        calls = iter([0.0, 1.0])

        def fake(*args, **kwargs):
            bounds = real(*args, **kwargs)
            return criteria.IndexBounds(bounds.beta, next(calls), bounds.log_upper_exact,
                                        bounds.log_upper_simplified)

        mocker.patch.object(criteria, "nuclearity_index_bounds", side_effect=fake)
        with pytest.raises(NumericError, match="log_lower increases with beta"):
            index_bounds_profile(arithmetic, 2.0, [1.0, 2.0])


class TestTauberian:
    def test_plug_in_example(self):
        result = tauberian_counting_bound(1.0, 1.0, 1.0, 100.0)
        assert result.beta_star == pytest.approx(0.1)
        assert result.log_bound == pytest.approx(math.log(100.0) + 20.0)
        assert result.bound == pytest.approx(100.0 * math.exp(20.0))

    def test_minimum_below_plug_in(self):
        rng = np.random.default_rng(7)
        for beta0, A, v in zip(rng.uniform(0.1, 5.0, 20), rng.uniform(0.1, 10.0, 20), rng.uniform(1.0, 1e4, 20)):
            plug_in = tauberian_counting_bound(1.0, beta0, A, v)
            minimum = minimize_tauberian(1.0, beta0, A, v)
            assert minimum.log_bound <= plug_in.log_bound + 1e-9

    def test_sub_exponential_growth(self):
        ratios = [tauberian_counting_bound(1.0, 1.0, 1.0, 10.0 ** k).log_bound / 10.0 ** k for k in range(1, 7)]
        assert all(later < earlier for earlier, later in zip(ratios, ratios[1:]))
        assert ratios[-1] < 2.1e-3

    def test_overflow(self):
        result = tauberian_counting_bound(1.0, 1.0, 1.0, 1e8)
        assert result.bound == math.inf
        assert math.isfinite(result.log_bound)

    def test_raw_form(self):
        assert tauberian_log_raw(0.1, 1.0, 1.0, 1.0, 100.0) == pytest.approx(math.log(100.0) + 20.0)

    def test_constants(self):
        constants = tauberian_constants(1.0, 1.0, 3.0)
        assert constants['C'] == pytest.approx(2.0)
        assert constants['B'] == pytest.approx(3.0)

    def test_constants_reproduce_bound(self):
        n, beta0, A, v = 2.0, 1.5, 0.7, 300.0
        constants = tauberian_constants(n, beta0, A)
        log_from_constants = (math.log(constants['B']) + 2.0 / (n + 1) * math.log(v)
                              + constants['C'] * v ** (n / (n + 1)))
        assert log_from_constants == pytest.approx(tauberian_counting_bound(n, beta0, A, v).log_bound)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError, match="v must be positive"):
            tauberian_counting_bound(1.0, 1.0, 1.0, 0.0)


class TestLocalNormality:
    def test_arithmetic(self, arithmetic):
        report = local_normality_verdict(arithmetic, 1.0)
        assert report.sufficient.convergent and report.necessary.convergent
        assert report.locally_normal is Tristate.YES
        assert report.all_temperatures is Tristate.YES

    def test_logarithmic_sufficient_sum_diverges(self, logarithmic):
        """Sum of (r+1)^{-1/8} diverges."""
        report = local_normality_verdict(logarithmic, 0.5)
        assert report.sufficient.divergent
        assert report.all_temperatures is Tristate.NO

    def test_logarithmic_gap_between_conditions(self, logarithmic):
        report = local_normality_verdict(logarithmic, 2.0)
        assert report.sufficient.divergent
        assert report.necessary.convergent
        assert report.locally_normal is Tristate.UNDETERMINED

    def test_finite_tower(self):
        report = local_normality_verdict(MassTower.finite([1.0, 4.0]), 0.01)
        assert report.locally_normal is Tristate.YES
        assert report.to_dict()['all_temperatures'] == "yes"
