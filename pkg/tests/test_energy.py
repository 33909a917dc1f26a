import math

import pytest
import numpy as np

from src.testfn.mollifier import make_mollifier, self_convolve
from src.testfn.averaging import build_test_function
from src.testfn.envelope import kappa_envelope, ExponentialEnvelope
from src.negstate.profile import build_profile
from src.negstate.kernel import derive_kernel, optimize_lambda, gamma_constant
from src.negstate.energy import (
    StatePacket,
    brackets,
    averaged_energy,
    mc_crosscheck,
    kinematic_sweep,
    theorem_bound,
    upper_bound_expression,
    verify_theorem,
)
from src.utils.errors import ValidationError, QuadratureError, TheoremViolationError

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def test_function():
    return build_test_function(self_convolve(make_mollifier(1.0)), beta0=1.0)


@pytest.fixture(scope="module")
def envelope(test_function):
    return kappa_envelope(test_function, m0=0.5)


@pytest.fixture(scope="module")
def profile():
    return build_profile()


@pytest.fixture(scope="module")
def kernel(profile):
    return derive_kernel(profile)


@pytest.fixture(scope="module")
def lambda0(kernel):
    return optimize_lambda(kernel)[0]


@pytest.fixture(scope="module")
def gamma(kernel):
    return gamma_constant(kernel, *optimize_lambda(kernel))


@pytest.fixture(scope="module")
def energy_at_one(test_function, profile, envelope, kernel, lambda0):
    return averaged_energy(1.0, lambda0, test_function, profile, envelope, kernel=kernel)


class TestStatePacket:
    def test_normalization_in_unit_interval(self, envelope, kernel, lambda0):
        state = StatePacket(1.0, lambda0, envelope, kernel)
        assert 0 < state.normalization <= 1
        assert state.normalization_sq == pytest.approx(
            1 / (1 + lambda0 ** 2 * state.phi ** 2 * kernel.trace), rel=1e-14)

    def test_vacuum_is_normalised(self, envelope, kernel):
        assert StatePacket(1.0, 0.0, envelope, kernel).normalization == 1.0

    def test_amplitude_symmetric(self, envelope, kernel):
        state = StatePacket(2.0, 1.0, envelope, kernel)
        rng = np.random.default_rng(11)
        k, k_p = rng.uniform(-2, 2, (50, 3)), rng.uniform(-2, 2, (50, 3))
        np.testing.assert_array_equal(state.amplitude(k, k_p), state.amplitude(k_p, k))

    def test_mass_must_exceed_cutoff(self, envelope, kernel):
        with pytest.raises(ValidationError, match="must exceed the envelope cutoff"):
            StatePacket(0.5, 1.0, envelope, kernel)

    def test_rejects_negative_lambda(self, envelope, kernel):
        with pytest.raises(ValidationError, match="nonnegative"):
            StatePacket(1.0, -1.0, envelope, kernel)


class TestKinematics:
    @pytest.mark.parametrize("m", [0.7, 1.0, 2.0, 4.0])
    def test_brackets_at_support_point(self, m):
        omega, omega_p, first, second = brackets(m, 0.75, 0.75, 1.0)
        assert omega == pytest.approx(1.25 * m)
        assert first == pytest.approx(2.5 * m, rel=1e-14)
        assert second == pytest.approx(0.9 * m, rel=1e-14)
        assert first <= 8 * m / math.sqrt(5)
        assert second >= 3 * m / (8 * SQRT2)

    @pytest.mark.parametrize("m", [1.0, 2.0, 4.0])
    def test_sweep_has_no_violations(self, m):
        report = kinematic_sweep(m, samples=500, seed=0)
        assert report.ok
        assert report.violations == {'omega_range': 0, 'first_bracket': 0, 'second_bracket': 0}
        assert math.sqrt(5) / 2 <= report.extremes['omega_min'] <= report.extremes['omega_max'] <= SQRT2

    def test_sweep_rejects_bad_mass(self):
        with pytest.raises(ValidationError):
            kinematic_sweep(0.0)


class TestAveragedEnergy:
    def test_vacuum_has_zero_energy(self, test_function, profile, envelope, kernel):
        result = averaged_energy(1.0, 0.0, test_function, profile, envelope, kernel=kernel)
        assert result.value == 0.0
        assert result.positive_term == 0.0 and result.negative_term == 0.0

    def test_terms_add_up(self, energy_at_one):
        assert energy_at_one.positive_term > 0
        assert energy_at_one.negative_term < 0
        assert energy_at_one.value == pytest.approx(
            energy_at_one.positive_term + energy_at_one.negative_term,
            abs=energy_at_one.error_estimate + 1e-300)

    def test_refinement_trace_recorded(self, energy_at_one):
        assert energy_at_one.trace
        assert energy_at_one.error_estimate <= 1e-6 * (
            abs(energy_at_one.positive_term) + abs(energy_at_one.negative_term))

    def test_negative_at_lambda0(self, test_function, profile, envelope, kernel, lambda0, gamma):
        result = averaged_energy(2.0, lambda0, test_function, profile, envelope, kernel=kernel)
        assert result.value <= theorem_bound(2.0, gamma, envelope) + result.error_estimate

    def test_non_convergence_reports_trace(self, test_function, profile, envelope, kernel, lambda0):
        with pytest.raises(QuadratureError) as info:
            averaged_energy(1.0, lambda0, test_function, profile, envelope, kernel=kernel,
                            rtol=1e-30, max_panels=16)
        assert len(info.value.trace) == 2

    def test_envelope_above_transform_detected(self, test_function, profile, kernel, lambda0):
        wrong = ExponentialEnvelope(kappa=1.0, beta0=0.01, m0=0.5)
        with pytest.raises(TheoremViolationError, match="falls below"):
            averaged_energy(1.0, lambda0, test_function, profile, wrong, kernel=kernel)

    def test_foreign_kernel_rejected(self, test_function, envelope, kernel, lambda0):
        with pytest.raises(ValidationError, match="different profile"):
            averaged_energy(1.0, lambda0, test_function, build_profile(), envelope, kernel=kernel)


class TestMonteCarlo:
    def test_vacuum_is_zero(self, test_function, profile, envelope, kernel):
        assert mc_crosscheck(1.0, 0.0, test_function, profile, envelope, 10_000, kernel=kernel) == (0.0, 0.0)

    def test_agrees_with_quadrature(self, test_function, profile, envelope, kernel, lambda0, energy_at_one):
        estimate, stderr = mc_crosscheck(1.0, lambda0, test_function, profile, envelope,
                                         samples=1_000_000, seed=0, kernel=kernel)
        assert stderr > 0
        assert abs(estimate - energy_at_one.value) < 3 * stderr + energy_at_one.error_estimate

    def test_reproducible(self, test_function, profile, envelope, kernel, lambda0):
        first = mc_crosscheck(1.0, lambda0, test_function, profile, envelope, 20_000, seed=5, kernel=kernel)
        second = mc_crosscheck(1.0, lambda0, test_function, profile, envelope, 20_000, seed=5, kernel=kernel)
        assert first == second

    def test_standard_error_scaling(self, test_function, profile, envelope, kernel, lambda0):
        """stderr ~ 1/sqrt(N): four times the samples halve it."""
        _, small = mc_crosscheck(1.0, lambda0, test_function, profile, envelope, 100_000, seed=1, kernel=kernel)
        _, large = mc_crosscheck(1.0, lambda0, test_function, profile, envelope, 400_000, seed=2, kernel=kernel)
        assert 1.6 <= small / large <= 2.4

    def test_rejects_few_samples(self, test_function, profile, envelope, kernel):
        with pytest.raises(ValidationError, match="at least 10000"):
            mc_crosscheck(1.0, 1.0, test_function, profile, envelope, 9_999, kernel=kernel)


class TestTheorem:
    def test_holds_for_mass_grid(self, test_function, profile, envelope, kernel):
        report = verify_theorem([1.0, 2.0, 4.0], test_function, profile, envelope, kernel=kernel)
        assert [row.m for row in report.rows] == [1.0, 2.0, 4.0]
        for row in report.rows:
            assert row.energy <= row.bound + row.error
            assert row.margin >= 1.0 - row.error / abs(row.bound)
            assert row.normalization_sq >= row.chain_bound
            assert math.isnan(row.mc_estimate)
        assert report.gamma <= report.P_max

    def test_report_serialization(self, test_function, profile, envelope, kernel):
        record = verify_theorem([2.0], test_function, profile, envelope, kernel=kernel).to_dict()
        assert set(record['rows'][0]) >= {'m', 'lambda0', 'Gamma', 'energy', 'bound', 'margin',
                                          'mc_estimate', 'mc_stderr'}

    def test_mass_below_cutoff_rejected(self, test_function, profile, envelope, kernel):
        with pytest.raises(ValidationError):
            verify_theorem([0.4], test_function, profile, envelope, kernel=kernel)

    def test_violation_is_hard_failure(self, test_function, profile, envelope, kernel, mocker):
        mocker.patch("src.negstate.energy.theorem_bound", return_value=-1e10)
        with pytest.raises(TheoremViolationError, match="exceeds the bound"):
            verify_theorem([1.0], test_function, profile, envelope, kernel=kernel)

    def test_bound_scaling_between_masses(self, envelope, gamma):
        m = 1.5
        ratio = theorem_bound(2 * m, gamma, envelope) / theorem_bound(m, gamma, envelope)
        expected = 16 * envelope(4 * SQRT2 * m) ** 2 / envelope(2 * SQRT2 * m) ** 2
        assert ratio == pytest.approx(expected, rel=1e-12)

    def test_upper_bound_most_negative_at_lambda0(self, envelope, kernel, lambda0):
        grid = lambda0 * np.linspace(0.5, 1.5, 11)
        values = upper_bound_expression(grid, 2.0, kernel, envelope)
        assert int(np.argmin(values)) == 5
