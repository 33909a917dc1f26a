import pytest
import numpy as np
from scipy.integrate import trapezoid

from src.testfn.mollifier import make_mollifier, self_convolve
from src.testfn.averaging import TestFunction, build_test_function, fourier_eval, rescale, sample_table
from src.utils.errors import ValidationError, QuadratureError


@pytest.fixture(scope="module")
def eta():
    return self_convolve(make_mollifier(1.0))


@pytest.fixture(scope="module")
def test_function(eta):
    """Default averaging function, a=1 and beta0=1."""
    return build_test_function(eta, beta0=1.0)


def test_unit_integral(test_function):
    """Test the normalization contract by an independent quadrature."""
    t = np.linspace(-2, 2, 20001)
    assert trapezoid(test_function(t), t) == pytest.approx(1.0, abs=1e-8)
    assert fourier_eval(test_function, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_even_and_nonnegative(test_function):
    t = np.linspace(0, 2.5, 251)
    np.testing.assert_allclose(test_function(t), test_function(-t), rtol=1e-15)
    assert np.all(test_function(t) >= 0)


def test_compact_support(test_function):
    assert test_function.support_radius == 2.0
    assert np.all(test_function(np.array([2.0, 2.1, -3.0])) == 0.0)


def test_transform_even(test_function):
    u = np.linspace(0, 30, 61)
    np.testing.assert_allclose(fourier_eval(test_function, u), fourier_eval(test_function, -u), atol=1e-15)


def test_transform_against_trapezoid_oracle(test_function):
    """Test f_hat(5) against an oversampled trapezoid rule."""
    t = np.linspace(-2, 2, 20001)
    oracle = trapezoid(test_function(t) * np.cos(5.0 * t), t)
    assert fourier_eval(test_function, 5.0) == pytest.approx(oracle, abs=1e-6)


def test_transform_nonnegative(test_function):
    u = np.linspace(0, 50, 501)
    assert np.all(fourier_eval(test_function, u) >= -1e-15)


def test_fourier_eval_returns_scalar(test_function):
    assert isinstance(fourier_eval(test_function, 1.5), float)


def test_invalid_beta0_rejected(eta):
    with pytest.raises(ValidationError, match="beta0 must be positive"):
        build_test_function(eta, beta0=0.0)


def test_imaginary_residue_detected(eta, mocker):
    """Test that an asymmetric rule trips the imaginary-part check."""
    f = TestFunction(eta, 1.0, 0.1)
    nodes = np.linspace(0.1, 1.9, 32)
    mocker.patch.object(f, "_rule", return_value=(nodes, np.full(32, 0.05)))
    with pytest.raises(QuadratureError, match="Imaginary part"):
        f.transform(3.0)


def test_rescale_identity(test_function):
    assert rescale(test_function, 1.0) is test_function


def test_rescale_unit_integral(test_function):
    f3 = rescale(test_function, 3.0)
    assert f3.support_radius == pytest.approx(6.0)
    assert fourier_eval(f3, 0.0) == pytest.approx(1.0, abs=1e-10)


def test_rescale_covariance(test_function):
    """Test f_lambda_hat(u) = f_hat(lambda u) from independent rules."""
    f3 = rescale(test_function, 3.0)
    assert fourier_eval(f3, 2.0) == pytest.approx(fourier_eval(test_function, 6.0), abs=1e-8)
    u = np.linspace(0, 10, 101)
    assert np.max(np.abs(fourier_eval(f3, u) - fourier_eval(test_function, 3.0 * u))) < 1e-8


def test_rescale_pointwise(test_function):
    f_half = rescale(test_function, 0.5)
    t = np.linspace(-1, 1, 21)
    np.testing.assert_allclose(f_half(t), 2.0 * test_function(2.0 * t), rtol=1e-12)


def test_rescale_rejects_nonpositive(test_function):
    with pytest.raises(ValidationError, match="must be positive"):
        rescale(test_function, -2.0)


def test_sample_table_columns(test_function):
    table = sample_table(test_function, n_points=11)
    assert list(table) == ['t', 'f']
    assert table['t'][0] == -2.0 and table['t'][-1] == 2.0
