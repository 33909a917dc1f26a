import math
import warnings

import pytest
import numpy as np
from scipy.integrate import quad, IntegrationWarning

from src.testfn.mollifier import make_mollifier, self_convolve
from src.testfn.averaging import build_test_function
from src.tower.spectrum import MassTower
from src.qei.bounds import single_field_bound, counting_bound, tower_bound
from src.utils.errors import ValidationError


def exp_transform(u):
    return np.exp(-np.asarray(u, dtype=float))


@pytest.fixture(scope="module")
def test_function():
    return build_test_function(self_convolve(make_mollifier(1.0)), beta0=1.0)


def test_single_field_gamma_integral():
    """int_0^inf u^4 e^{-2u} du = 4!/2^5."""
    bound = single_field_bound(exp_transform, 0.0)
    assert not bound.divergent
    assert bound.value == pytest.approx(-0.75, rel=1e-10)
    assert bound.dimension == 4 and bound.constant == 1.0


def test_single_field_fallback_integration_is_approximate(mocker):
    """Segments integrated after a quad warning mark the bound approximate."""
    def noisy_quad(f, a, b, **kwargs):
        warnings.warn("roundoff error is detected", IntegrationWarning)
        return quad(f, a, b)

    mocker.patch("src.qei.bounds.quad", side_effect=noisy_quad)
    bound = single_field_bound(exp_transform, 0.0)
    assert bound.approximate
    assert bound.value == pytest.approx(-0.75, rel=1e-6)


def test_single_field_monotone_in_mass():
    values = [single_field_bound(exp_transform, m).value for m in (0.0, 1.0, 2.0, 5.0, 10.0, 20.0)]
    assert all(v <= 0 for v in values)
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))
    assert values[-1] == pytest.approx(0.0, abs=1e-10)


def test_single_field_linear_in_constant():
    base = single_field_bound(exp_transform, 1.0, C=1.0).value
    assert single_field_bound(exp_transform, 1.0, C=3.0).value == pytest.approx(3.0 * base, rel=1e-14)


def test_single_field_test_function(test_function):
    at_one = single_field_bound(test_function.transform, 1.0)
    at_zero = single_field_bound(test_function.transform, 0.0)
    assert math.isfinite(at_one.value) and at_one.value < 0
    assert abs(at_one.value) <= abs(at_zero.value)


def test_single_field_non_decaying_transform_diverges():
    bound = single_field_bound(lambda u: np.ones_like(u), 1.0)
    assert bound.divergent
    assert bound.value == -math.inf
    assert "doublings" in bound.diagnostic


@pytest.mark.parametrize("kwargs, message", [
    ({'C': 0.0}, "C must be positive"),
    ({'d': 1}, "dimension d"),
    ({'m': -1.0}, "nonnegative"),
])
def test_single_field_rejects_bad_parameters(kwargs, message):
    params = {'m': 0.0, **kwargs}
    with pytest.raises(ValidationError, match=message):
        single_field_bound(exp_transform, **params)


def test_tower_reduces_to_single_field():
    tower = MassTower.finite([1.5])
    assert tower_bound(exp_transform, tower).value == pytest.approx(
        single_field_bound(exp_transform, 1.5).value, rel=1e-8)


def test_logarithmic_tower_diverges():
    """N(u) ~ e^{2u} beats |g_hat|^2 = e^{-u/2}."""
    bound = tower_bound(lambda u: np.exp(-u / 4.0), MassTower.logarithmic(1.0))
    assert bound.divergent
    assert bound.value == -math.inf


def test_arithmetic_tower_dominates_single_field():
    tower = MassTower.arithmetic(1.0)
    bound = tower_bound(exp_transform, tower)
    assert not bound.divergent
    assert not bound.approximate
    assert bound.value <= single_field_bound(exp_transform, 1.0).value


def test_arithmetic_tower_closed_form():
    """sum_r int_r^inf u^4 e^{-2u} du, each term a finite Gamma-integral."""
    def term(r):
        # int_r^inf u^4 e^{-2u} du = e^{-2r} sum_k 4!/(k! 2^{5-k}) r^k
        return math.exp(-2 * r) * sum(math.factorial(4) / math.factorial(k) / 2 ** (5 - k) * r ** k
                                      for k in range(5))
    exact = sum(term(r) for r in range(1, 60))
    assert tower_bound(exp_transform, MassTower.arithmetic(1.0)).value == pytest.approx(-exact, rel=1e-9)


def test_integrand_samples_recorded():
    bound = tower_bound(exp_transform, MassTower.arithmetic(1.0))
    u, values = bound.integrand_samples
    assert len(u) == len(values) == 201
    assert np.all(values >= 0)


def test_counting_bound_smooth_envelope():
    """N(u) = u with |g_hat|^2 = e^{-2u}: int_0^inf u^5 e^{-2u} du = 5!/2^6."""
    bound = counting_bound(exp_transform, lambda u: u, lower=0.0)
    assert bound.value == pytest.approx(-120.0 / 64.0, rel=1e-10)


def test_custom_tower_needs_tail():
    with pytest.raises(ValidationError, match="certified tail"):
        tower_bound(exp_transform, MassTower.custom([1.0, 2.0]))


def test_custom_tower_with_tail_is_approximate_envelope():
    tower = MassTower.custom([1.0, 2.0, 3.0], tail_slope=1.0)
    bound = tower_bound(exp_transform, tower)
    assert not bound.divergent
    assert bound.value <= 0


def test_bound_serialization():
    record = single_field_bound(exp_transform, 0.0).to_dict()
    assert record['divergent'] is False
    assert record['value'] == pytest.approx(-0.75, rel=1e-10)
