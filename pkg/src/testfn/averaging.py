"""
Lorentzian-damped averaging functions f(t) = beta0 eta(t) / (pi (t^2 + beta0^2)) / Z.

Transforms are computed by composite Gauss-Legendre quadrature over the
compact support, so arbitrary real frequencies are available.
"""

import logging
from typing import Dict, Tuple, Union

import numpy as np

from src.quadrature import gauss_legendre_panels, integrate_panels
from src.testfn.mollifier import SelfConvolution
from src.utils.errors import ValidationError, NumericError, QuadratureError, ErrorContext

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

IMAGINARY_TOLERANCE = 1e-12
NORMALIZATION_TOLERANCE = 1e-8
_CHUNK_ELEMENTS = 1 << 22   # phase-matrix entries per block


class TestFunction:
    """
    Even, nonnegative, compactly supported averaging weight with unit integral.

    A rescaled function f_lambda(t) = f(t / lambda) / lambda is represented by
    the same eta dilated by ``scale`` and the Lorentzian width ``beta0``
    multiplied by the same factor.
    """

    __test__ = False  # not a pytest class

    def __init__(self, eta: SelfConvolution, beta0: float, normalization: float,
                 scale: float = 1.0, order: int = 16, base_panels: int = 32):
        if not beta0 > 0:
            raise ValidationError(f"beta0 must be positive, got {beta0}",
                                  ErrorContext("testfn", "build_test_function", {'beta0': beta0}))
        if not normalization > 0:
            raise ValidationError(f"Normalization must be positive, got {normalization}")
        if not scale > 0:
            raise ValidationError(f"Scale must be positive, got {scale}")

        self.eta = eta
        self.beta0 = float(beta0)
        self.normalization = float(normalization)
        self.scale = float(scale)
        self.order = order
        self.base_panels = base_panels
        self._rules: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}

    @property
    def support_radius(self) -> float:
        return self.scale * self.eta.support_radius

    def __call__(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        lorentz = self.beta0 / (np.pi * (t ** 2 + self.beta0 ** 2))
        return lorentz * self.eta(t / self.scale) / self.normalization

    def _rule(self, u_max: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes and weighted samples w_i f(t_i) resolving frequencies up to u_max."""
        r = self.support_radius
        # at most ~2 radians of oscillation per panel
        needed = max(self.base_panels, int(np.ceil(u_max * r)))
        panels = 1 << int(np.ceil(np.log2(needed)))
        if panels not in self._rules:
            nodes, weights = gauss_legendre_panels(-r, r, panels, self.order)
            self._rules[panels] = (nodes, weights * self(nodes))
            logger.debug(f"Built transform rule with {panels} panels for |u| <= {u_max:.4g}")
        return self._rules[panels]

    def transform(self, u: ArrayLike, check: bool = True) -> np.ndarray:
        """
        Evaluate f_hat(u) = int f(t) e^{-iut} dt.

        Args:
            u (ArrayLike): Frequencies.
            check (bool): Verify that the discarded imaginary part is negligible.

        Returns:
            np.ndarray: Real transform values with the shape of u.

        Raises:
            QuadratureError: If the imaginary residue exceeds the tolerance.
        """
        u_arr = np.asarray(u, dtype=float)
        flat = u_arr.ravel()
        if flat.size == 0:
            return np.zeros_like(u_arr)

        nodes, weighted = self._rule(float(np.max(np.abs(flat))))
        out = np.empty_like(flat)
        rows = max(1, _CHUNK_ELEMENTS // nodes.size)
        for start in range(0, flat.size, rows):
            phase = np.outer(flat[start:start + rows], nodes)
            out[start:start + rows] = np.cos(phase) @ weighted
            if check:
                residue = float(np.max(np.abs(np.sin(phase) @ weighted)))
                if residue > IMAGINARY_TOLERANCE:
                    raise QuadratureError(
                        f"Imaginary part {residue:.3e} of the transform exceeds {IMAGINARY_TOLERANCE}",
                        context=ErrorContext("testfn", "fourier_eval", {'beta0': self.beta0, 'scale': self.scale}),
                    )
        return out.reshape(u_arr.shape)

    def __repr__(self) -> str:
        return (f"TestFunction(beta0={self.beta0}, scale={self.scale}, "
                f"support_radius={self.support_radius}, normalization={self.normalization:.12g})")


def build_test_function(eta: SelfConvolution, beta0: float = 1.0) -> TestFunction:
    """
    Damp eta by a Lorentzian of width beta0 and normalize to unit integral.

    Args:
        eta (SelfConvolution): The self-convolved mollifier.
        beta0 (float): Lorentzian width, > 0.

    Returns:
        TestFunction: The normalized averaging function.

    Raises:
        ValidationError: If beta0 is not positive.
        NumericError: If the normalization quadrature fails.
    """
    if not beta0 > 0:
        raise ValidationError(f"beta0 must be positive, got {beta0}",
                              ErrorContext("testfn", "build_test_function", {'beta0': beta0}))

    r = eta.support_radius
    try:
        result = integrate_panels(
            lambda t: beta0 * eta(t) / (np.pi * (t ** 2 + beta0 ** 2)),
            -r, r, n_panels=8, rtol=1e-14,
        )
    except QuadratureError:
        raise
    except Exception as e:
        logger.error(f"Normalization quadrature failed: {e}")
        raise NumericError(f"Failed to normalize test function: {e}") from e

    f = TestFunction(eta, beta0, result.value)
    total = float(f.transform(0.0))
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise NumericError(
            f"Test function integrates to {total:.12g}, not 1",
            ErrorContext("testfn", "build_test_function", {'beta0': beta0, 'normalization': result.value}),
        )
    logger.info(f"Built test function: beta0={beta0}, support radius={r}, Z={result.value:.12g}")
    return f


def fourier_eval(f: TestFunction, u: ArrayLike) -> Union[float, np.ndarray]:
    """Real transform f_hat(u); a scalar for scalar u."""
    values = f.transform(u)
    return float(values) if np.ndim(values) == 0 else values


def rescale(f: TestFunction, lam: float) -> TestFunction:
    """
    Return f_lambda(t) = f(t / lambda) / lambda, whose transform is f_hat(lambda u).

    Args:
        f (TestFunction): The base function.
        lam (float): Positive dilation factor.

    Returns:
        TestFunction: The rescaled function; f itself when lam == 1.
    """
    if not lam > 0:
        raise ValidationError(f"Rescaling factor must be positive, got {lam}",
                              ErrorContext("testfn", "rescale", {'lambda': lam}))
    if lam == 1.0:
        return f
    return TestFunction(f.eta, lam * f.beta0, f.normalization, scale=lam * f.scale,
                        order=f.order, base_panels=f.base_panels)


def sample_table(f: TestFunction, n_points: int = 401) -> Dict[str, np.ndarray]:
    """Columns (t, f) over the support for CSV export."""
    r = f.support_radius
    t = np.linspace(-r, r, n_points)
    return {'t': t, 'f': f(t)}
