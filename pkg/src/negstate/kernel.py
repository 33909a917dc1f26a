"""
The kernel C(u, u') = int d^3u''/(2 pi)^3 B(u'', u) B(u'', u') and the
constants of the negative-energy bound.

For the separable profile

    C(u, u') = K_C g(|u|) g(|u'|) A(u_hat . u'_hat),   K_C = A0^2 G2 / (2 pi)^3,

where A is the spherical self-convolution of h. Expanding
h(c) = sum_l h_l P_l(c), the product formula for Legendre polynomials on the
sphere gives A(c) = sum_l 4 pi h_l^2 / (2l + 1) P_l(c). Since every term is
nonnegative at c = 1 and A(1) = 2 pi int h^2 exactly, the discarded part of
the series is bounded by A(1) minus the partial sum at c = 1.
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Tuple, Dict, Any

import numpy as np
from numpy.polynomial import legendre

from src.quadrature import gauss_legendre_panels
from src.negstate.profile import RadialAngularProfile, ANGULAR_SUPPORT, RADIAL_SUPPORT, build_profile
from src.utils.errors import ValidationError, NumericError, ErrorContext

logger = logging.getLogger(__name__)

LEGENDRE_CUTOFF = 40
MAX_LEGENDRE_CUTOFF = 1280
TAIL_TOLERANCE = 1e-8           # relative to A(1)
CONSISTENCY_TOLERANCE = 1e-6
_NODES_PER_PANEL = 32
_RADIAL_PANELS = 32
_RADIAL_ORDER = 8
_TWO_PI_3 = (2.0 * math.pi) ** 3


@dataclass(frozen=True)
class KernelC:
    """
    C kernel of a profile with its trace and double integral.

    Attributes:
        profile: The profile B the kernel was derived from.
        coefficients: Legendre coefficients 4 pi h_l^2 / (2l + 1) of A.
        tail_bound: Bound on |A(c) - partial sum| for all c.
        prefactor: K_C.
        trace: Tr C = int d^3u/(2 pi)^3 C(u, u), by quadrature of the series.
        double_integral: I_C = int C d^3u d^3u'/(2 pi)^6, by quadrature of the series.
        trace_inner: Tr C from the square of B.
        double_integral_inner: I_C from the squared inner integral of B.
    """
    profile: RadialAngularProfile
    coefficients: np.ndarray
    tail_bound: float
    prefactor: float
    trace: float
    double_integral: float
    trace_inner: float = math.nan
    double_integral_inner: float = math.nan

    @property
    def cutoff(self) -> int:
        return len(self.coefficients) - 1

    def angular_factor(self, c: np.ndarray) -> np.ndarray:
        return legendre.legval(np.asarray(c, dtype=float), self.coefficients)

    def reduced(self, rho: np.ndarray, rho_p: np.ndarray, c: np.ndarray) -> np.ndarray:
        g = self.profile.g
        return self.prefactor * g(rho) * g(rho_p) * self.angular_factor(c)

    def __call__(self, u: np.ndarray, u_p: np.ndarray) -> np.ndarray:
        """C(u, u') for 3-vectors stacked along the last axis."""
        u = np.asarray(u, dtype=float)
        u_p = np.asarray(u_p, dtype=float)
        rho = np.linalg.norm(u, axis=-1)
        rho_p = np.linalg.norm(u_p, axis=-1)
        with np.errstate(invalid='ignore', divide='ignore'):
            c = np.einsum('...i,...i->...', u, u_p) / (rho * rho_p)
        return self.reduced(rho, rho_p, np.nan_to_num(np.clip(c, -1.0, 1.0)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'cutoff': self.cutoff,
            'tail_bound': self.tail_bound,
            'trace': self.trace,
            'double_integral': self.double_integral,
            'trace_inner': self.trace_inner,
            'double_integral_inner': self.double_integral_inner,
        }


def legendre_coefficients(h, cutoff: int) -> np.ndarray:
    """h_l = (2l + 1)/2 int h(c) P_l(c) dc for l = 0..cutoff."""
    panels = max(16, cutoff // 8)
    nodes, weights = gauss_legendre_panels(*ANGULAR_SUPPORT, panels, _NODES_PER_PANEL)
    vander = legendre.legvander(nodes, cutoff)
    l = np.arange(cutoff + 1)
    return 0.5 * (2 * l + 1) * ((weights * h(nodes)) @ vander)


def derive_kernel(profile: RadialAngularProfile, cutoff: int = LEGENDRE_CUTOFF,
                  tail_tolerance: float = TAIL_TOLERANCE) -> KernelC:
    """
    Derive C from B by Legendre expansion of h.

    The cutoff doubles from ``cutoff`` until the certified tail falls below
    tail_tolerance * A(1).

    Args:
        profile (RadialAngularProfile): Normalised profile.
        cutoff (int): Initial Legendre cutoff.
        tail_tolerance (float): Relative tail allowed in A.

    Returns:
        KernelC: The kernel with Tr C and I_C.

    Raises:
        NumericError: If the tail stays above tolerance at the largest cutoff,
            or the kernel and profile computations of Tr C or I_C disagree.
    """
    G2 = profile.radial_moments['G2']
    H2 = profile.angular_moments['H2']
    A0 = profile.normalization
    A_one = 2.0 * math.pi * H2

    L = cutoff
    while True:
        h_l = legendre_coefficients(profile.h, L)
        coefficients = 4.0 * math.pi * h_l ** 2 / (2 * np.arange(L + 1) + 1)
        tail = max(A_one - float(np.sum(coefficients)), 0.0)
        logger.debug(f"Legendre cutoff {L}: tail {tail:.3e} of A(1)={A_one:.6g}")
        if tail <= tail_tolerance * A_one:
            break
        if 2 * L > MAX_LEGENDRE_CUTOFF:
            raise NumericError(
                f"Legendre tail {tail / A_one:.3e} of the angular kernel exceeds {tail_tolerance} "
                f"at cutoff {L}",
                ErrorContext("negstate", "derive_kernel", {'cutoff': L, 'tail': tail}),
            )
        L *= 2

    prefactor = A0 ** 2 * G2 / _TWO_PI_3
    kernel = KernelC(profile, coefficients, tail, prefactor, math.nan, math.nan)
    trace, double_integral = kernel_integrals(kernel)
    trace_inner, double_integral_inner = profile_integrals(profile)
    # the series at c = 1 may miss the certified tail
    _check_consistency("Tr C", trace, trace_inner, allowance=tail / A_one)
    _check_consistency("I_C", double_integral, double_integral_inner)
    if not trace > 0 or not double_integral > 0:
        raise NumericError("C kernel has nonpositive trace or double integral")

    logger.info(f"Derived C kernel: cutoff={L}, tail={tail:.2e}, TrC={trace:.10g}, I_C={double_integral:.10g}")
    return replace(kernel, trace=trace, double_integral=double_integral,
                   trace_inner=trace_inner, double_integral_inner=double_integral_inner)


def _radial_rule() -> Tuple[np.ndarray, np.ndarray]:
    rho, weights = gauss_legendre_panels(*RADIAL_SUPPORT, _RADIAL_PANELS, _RADIAL_ORDER)
    return rho, weights * rho ** 2


def kernel_integrals(kernel: KernelC) -> Tuple[float, float]:
    """
    Tr C and I_C by direct quadrature of the kernel.

    The trace reads the series at c = 1, so it sees every retained Legendre
    mode; I_C integrates the series over c in [-1, 1] with a rule exact for
    its degree.
    """
    rho, radial = _radial_rule()
    c, w_c = gauss_legendre_panels(-1.0, 1.0, 1, kernel.cutoff // 2 + 2)
    total = 0.0
    for c_k, w_k in zip(c, w_c):
        total += w_k * (radial @ kernel.reduced(rho[:, None], rho[None, :], c_k) @ radial)
    trace = 4.0 * math.pi * float(radial @ kernel.reduced(rho, rho, 1.0)) / _TWO_PI_3
    return trace, float(8.0 * math.pi ** 2 * total / _TWO_PI_3 ** 2)


def profile_integrals(profile: RadialAngularProfile) -> Tuple[float, float]:
    """
    Tr C and I_C from B alone.

    Tr C = int d^3u d^3u''/(2 pi)^6 B(u'', u)^2, and
    I_C = int d^3u''/(2 pi)^3 [int d^3u/(2 pi)^3 B(u'', u)]^2 with the inner
    integral taken at every radial node |u''|, polar axis along u''.
    """
    rho, radial = _radial_rule()
    c, w_c = gauss_legendre_panels(*ANGULAR_SUPPORT, _RADIAL_PANELS, _RADIAL_ORDER)
    inner = np.zeros_like(rho)
    square = 0.0
    for c_k, w_k in zip(c, w_c):
        B = profile.reduced(rho[:, None], rho[None, :], c_k)      # rows |u''|, columns |u|
        inner += w_k * (B @ radial)
        square += w_k * (radial @ B ** 2 @ radial)
    inner *= 2.0 * math.pi / _TWO_PI_3
    trace = 8.0 * math.pi ** 2 * float(square) / _TWO_PI_3 ** 2
    return trace, 4.0 * math.pi * float(radial @ inner ** 2) / _TWO_PI_3


def _check_consistency(name: str, from_kernel: float, from_profile: float, allowance: float = 0.0) -> None:
    mismatch = abs(from_kernel - from_profile) / abs(from_profile)
    if not mismatch <= CONSISTENCY_TOLERANCE + allowance:
        raise NumericError(f"{name} computations disagree by {mismatch:.3e}",
                           ErrorContext("negstate", "derive_kernel",
                                        {'kernel': from_kernel, 'profile': from_profile}))


def energy_quadratic(lam, kernel: KernelC):
    """P(lambda) = (3/16) lambda - (8/sqrt5) I_C lambda^2."""
    lam = np.asarray(lam, dtype=float)
    return 3.0 / 16.0 * lam - 8.0 / math.sqrt(5.0) * kernel.double_integral * lam ** 2


def optimize_lambda(kernel: KernelC) -> Tuple[float, float]:
    """
    Vertex of P.

    Returns:
        Tuple[float, float]: lambda0 = 3 sqrt5 / (256 I_C) and P_max = (3/32) lambda0.

    Raises:
        ValidationError: If I_C is not positive.
    """
    I_C = kernel.double_integral
    if not I_C > 0:
        raise ValidationError(f"I_C must be positive, got {I_C}",
                              ErrorContext("negstate", "optimize_lambda", {'I_C': I_C}))
    lambda0 = 3.0 * math.sqrt(5.0) / (256.0 * I_C)
    return lambda0, 3.0 / 32.0 * lambda0


def gamma_constant(kernel: KernelC, lambda0: float, P_max: float) -> float:
    """Gamma = P(lambda0) / (1 + lambda0^2 Tr C)."""
    return P_max / (1.0 + lambda0 ** 2 * kernel.trace)


@lru_cache(maxsize=1)
def default_gamma() -> float:
    """Gamma of the default profile."""
    kernel = derive_kernel(build_profile())
    return gamma_constant(kernel, *optimize_lambda(kernel))
