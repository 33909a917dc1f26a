import math

import pytest
import numpy as np

from src.tower.spectrum import MassTower, TailKind, build_tower, integrate_against_counting
from src.utils.errors import ValidationError


@pytest.fixture
def arithmetic():
    return MassTower.arithmetic(1.0)


@pytest.fixture
def logarithmic():
    return MassTower.logarithmic(1.0)


def test_arithmetic_counting(arithmetic):
    assert arithmetic.counting(2.5) == 2
    assert arithmetic.counting(3.0) == 3
    assert arithmetic.counting(0.5) == 0


def test_logarithmic_counting(logarithmic):
    """m_r = log(r+1)/2 <= 1 exactly when r <= e^2 - 1."""
    assert logarithmic.counting(1.0) == math.floor(math.e ** 2 - 1) == 6


def test_logarithmic_first_mass(logarithmic):
    assert logarithmic.m1 == pytest.approx(math.log(2) / 2)
    assert logarithmic.counting(logarithmic.m1) == 1


@pytest.mark.parametrize("tower", [
    MassTower.arithmetic(0.7),
    MassTower.logarithmic(0.5),
    MassTower.finite([1.0, 2.0, 2.0, 5.0]),
])
def test_counting_zero_below_gap(tower):
    assert tower.counting(0.0) == 0
    assert tower.counting(tower.m1 * 0.999) == 0


@pytest.mark.parametrize("tower", [MassTower.arithmetic(0.3), MassTower.logarithmic(2.0)])
def test_counting_array_matches_scalar(tower):
    u = np.concatenate([np.linspace(0, 5, 97), tower.masses(np.arange(1, 30))])
    expected = [tower.counting(x) for x in u]
    np.testing.assert_array_equal(tower.counting_array(u), expected)


def test_counting_nondecreasing_and_right_continuous(arithmetic):
    u = np.linspace(0, 10, 1001)
    counts = arithmetic.counting_array(u)
    assert np.all(np.diff(counts) >= 0)
    assert arithmetic.counting(2.0) == 2  # jump included at the mass


def test_finite_counting_with_repeats():
    tower = MassTower.finite([1.0, 2.0, 2.0, 5.0])
    assert tower.counting(2.0) == 3
    assert tower.counting(100.0) == 4
    assert tower.size == 4


def test_custom_counting_limited_to_certified_range():
    tower = MassTower.custom([1.0, 1.5, 3.0], tail_slope=2.0)
    assert tower.counting(2.0) == 2
    assert tower.counting(7.9) == 3  # m_r >= 2r excludes r >= 4 below 8
    with pytest.raises(ValidationError, match="beyond the certified range"):
        tower.counting(8.0)


def test_counting_rejects_negative(arithmetic):
    with pytest.raises(ValidationError, match="u >= 0"):
        arithmetic.counting(-1.0)


def test_masses(arithmetic, logarithmic):
    np.testing.assert_allclose(arithmetic.masses([1, 2, 3]), [1.0, 2.0, 3.0])
    np.testing.assert_allclose(logarithmic.masses([1, 3]), [math.log(2) / 2, math.log(4) / 2])


@pytest.mark.parametrize("masses", [[0.0, 1.0], [-1.0]])
def test_mass_gap_required(masses):
    with pytest.raises(ValidationError, match="mass gap violated"):
        MassTower.finite(masses)


def test_arithmetic_mass_gap_required():
    with pytest.raises(ValidationError, match="mass gap violated"):
        build_tower("arithmetic", m1=0.0)


def test_nondecreasing_required():
    with pytest.raises(ValidationError, match="nondecreasing"):
        MassTower.finite([1.0, 3.0, 2.0])


def test_build_logarithmic():
    tower = build_tower("logarithmic", d0=1.0)
    assert tower.kind is TailKind.LOGARITHMIC
    assert tower.d0 == 1.0


def test_build_checks_listed_masses():
    build_tower("arithmetic", m1=0.5, masses=[0.5, 1.0, 1.5])
    with pytest.raises(ValidationError, match="inconsistent with the tail descriptor"):
        build_tower("arithmetic", m1=0.5, masses=[0.5, 1.0, 1.6])


def test_build_checks_logarithmic_gap():
    with pytest.raises(ValidationError, match="inconsistent with d0"):
        build_tower("logarithmic", d0=1.0, m1=1.0)


def test_build_rejects_unknown_type():
    with pytest.raises(ValidationError, match="unknown tower type"):
        build_tower("geometric", m1=1.0)


def test_build_custom_tail_bound():
    tower = build_tower("custom", masses=[1.0, 2.0], tail_bound={"slope": 1.0})
    assert tower.tail_slope == 1.0
    with pytest.raises(ValidationError, match="tail_bound must be"):
        build_tower("custom", masses=[1.0], tail_bound={"rate": 1.0})


def test_jump_points(arithmetic):
    np.testing.assert_array_equal(arithmetic.jump_points(3.5), [1.0, 2.0, 3.0])


def test_integrate_against_counting_finite():
    """int_0^3 N(u) du for masses {1, 2} is 1 + 2."""
    tower = MassTower.finite([1.0, 2.0])
    result = integrate_against_counting(tower, np.ones_like, 3.0)
    assert result.value == pytest.approx(3.0, rel=1e-14)
    assert not result.approximate


def test_integrate_against_counting_blind_region(logarithmic):
    """Past the jump budget the dense region is integrated without resolving jumps."""
    result = integrate_against_counting(logarithmic, lambda u: np.exp(-4.0 * u), 6.0,
                                        max_jumps=100, blind_width=1e-3)
    exact = sum(math.exp(-4.0 * m) / 4.0 - math.exp(-24.0) / 4.0
                for m in logarithmic.masses(np.arange(1, logarithmic.counting(6.0) + 1)))
    assert result.approximate
    assert result.value == pytest.approx(exact, rel=1e-3)
