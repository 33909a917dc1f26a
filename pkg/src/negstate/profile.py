"""
Momentum profile B(u, u') = A0 g(|u|) g(|u'|) h(u_hat . u'_hat) of the
vacuum-plus-two-particle state.

g lives on [1/2, 1] in the dimensionless momentum |u| and h on (1/2, 1] in
the cosine of the angle between u and u', so every pair in the support
subtends less than pi/3. A0 normalises

    int d^3u d^3u' / (2 pi)^6  B(u, u') = 1.

With the separable form every integral over the two spheres collapses to
8 pi^2 int dc, and the radial integrals to moments of g.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Union, Dict

import numpy as np

from src.quadrature import gauss_legendre_panels, integrate_panels
from src.utils.errors import ValidationError, ErrorContext

logger = logging.getLogger(__name__)

RADIAL_SUPPORT = (0.5, 1.0)
ANGULAR_SUPPORT = (0.5, 1.0)
NORMALIZATION_TOLERANCE = 1e-8
_SUPPORT_SAMPLES = 200
_TWO_PI_6 = (2.0 * math.pi) ** 6

Profile1D = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BumpSpec:
    """Standard bump exp(-1/(1 - x^2)) stretched over (lower, upper)."""
    lower: float
    upper: float

    def __post_init__(self):
        if not self.upper > self.lower:
            raise ValidationError(f"Bump interval ({self.lower}, {self.upper}) is empty")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        half = 0.5 * (self.upper - self.lower)
        y = (x - 0.5 * (self.upper + self.lower)) / half
        inside = np.abs(y) < 1.0
        gap = np.where(inside, 1.0 - y ** 2, 1.0)
        return np.where(inside, np.exp(-1.0 / gap), 0.0)


def _resolve(spec: Union[None, BumpSpec, Profile1D], support, name: str) -> Profile1D:
    if spec is None:
        return BumpSpec(*support)
    if isinstance(spec, BumpSpec):
        if spec.lower < support[0] or spec.upper > support[1]:
            raise ValidationError(
                f"{name} bump ({spec.lower}, {spec.upper}) leaves the support [{support[0]}, {support[1]}]",
                ErrorContext("negstate", "build_profile", {name: (spec.lower, spec.upper)}),
            )
        return spec
    if callable(spec):
        return spec
    raise ValidationError(f"{name} must be a BumpSpec or a callable, got {type(spec).__name__}")


def _check_support(func: Profile1D, outside: np.ndarray, inside: np.ndarray, name: str) -> None:
    context = ErrorContext("negstate", "build_profile", {'profile': name})
    leaked = np.asarray(func(outside), dtype=float)
    if np.any(leaked != 0.0):
        where = outside[np.argmax(np.abs(leaked))]
        raise ValidationError(f"{name} does not vanish outside its support (nonzero at {where:.4g})", context)
    values = np.asarray(func(inside), dtype=float)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise ValidationError(f"{name} must be finite and nonnegative on its support", context)
    if not np.any(values > 0):
        raise ValidationError(f"{name} vanishes identically", context)


@dataclass(frozen=True)
class RadialAngularProfile:
    """
    Normalised separable profile.

    Attributes:
        g: Radial bump on [1/2, 1].
        h: Angular bump on (1/2, 1] in cos(theta).
        normalization: A0.
        radial_moments: {'G1': int rho^2 g, 'G2': int rho^2 g^2}.
        angular_moments: {'H0': int h dc, 'H2': int h^2 dc}.
    """
    g: Profile1D
    h: Profile1D
    normalization: float
    radial_moments: Dict[str, float]
    angular_moments: Dict[str, float]

    def reduced(self, rho: np.ndarray, rho_p: np.ndarray, c: np.ndarray) -> np.ndarray:
        """B as a function of |u|, |u'| and the cosine between them."""
        return self.normalization * self.g(rho) * self.g(rho_p) * self.h(c)

    def __call__(self, u: np.ndarray, u_p: np.ndarray) -> np.ndarray:
        """B(u, u') for 3-vectors stacked along the last axis."""
        u = np.asarray(u, dtype=float)
        u_p = np.asarray(u_p, dtype=float)
        rho = np.linalg.norm(u, axis=-1)
        rho_p = np.linalg.norm(u_p, axis=-1)
        with np.errstate(invalid='ignore', divide='ignore'):
            c = np.einsum('...i,...i->...', u, u_p) / (rho * rho_p)
        c = np.nan_to_num(np.clip(c, -1.0, 1.0))
        return self.reduced(rho, rho_p, c)

    def total_mass(self, panels: int = 32, order: int = 8) -> float:
        """int B d^3u d^3u' / (2 pi)^6 by tensor-product quadrature, independent of the moments."""
        rho, w_rho = gauss_legendre_panels(*RADIAL_SUPPORT, panels, order)
        c, w_c = gauss_legendre_panels(*ANGULAR_SUPPORT, panels, order)
        radial = w_rho * rho ** 2
        integral = 0.0
        for c_k, w_k in zip(c, w_c):
            integral += w_k * (radial @ self.reduced(rho[:, None], rho[None, :], c_k) @ radial)
        return float(8.0 * math.pi ** 2 * integral / _TWO_PI_6)


def build_profile(g_spec: Union[None, BumpSpec, Profile1D] = None,
                  h_spec: Union[None, BumpSpec, Profile1D] = None) -> RadialAngularProfile:
    """
    Build and normalise B = A0 g(|u|) g(|u'|) h(cos theta).

    Args:
        g_spec: Radial profile; a BumpSpec inside [1/2, 1] or a callable.
            Default: the standard bump over (1/2, 1).
        h_spec: Angular profile; a BumpSpec inside (1/2, 1] or a callable.
            Default: the standard bump over (1/2, 1).

    Returns:
        RadialAngularProfile: The normalised profile.

    Raises:
        ValidationError: If a profile leaves its support, is negative, or vanishes.
    """
    g = _resolve(g_spec, RADIAL_SUPPORT, "g")
    h = _resolve(h_spec, ANGULAR_SUPPORT, "h")

    _check_support(g, np.concatenate([np.linspace(0.0, 0.5, _SUPPORT_SAMPLES, endpoint=False),
                                      np.linspace(1.0, 1.5, _SUPPORT_SAMPLES + 1)[1:]]),
                   np.linspace(*RADIAL_SUPPORT, _SUPPORT_SAMPLES), "g")
    _check_support(h, np.linspace(-1.0, 0.5, 3 * _SUPPORT_SAMPLES + 1),
                   np.linspace(*ANGULAR_SUPPORT, _SUPPORT_SAMPLES + 1)[1:], "h")

    def moment(func):
        return integrate_panels(func, *RADIAL_SUPPORT, rtol=1e-14).value

    G1 = moment(lambda r: r ** 2 * g(r))
    G2 = moment(lambda r: r ** 2 * g(r) ** 2)
    H0 = integrate_panels(h, *ANGULAR_SUPPORT, rtol=1e-14).value
    H2 = integrate_panels(lambda c: h(c) ** 2, *ANGULAR_SUPPORT, rtol=1e-14).value

    # int d^3u d^3u' g g h = G1^2 * 4 pi * 2 pi * H0
    normalization = _TWO_PI_6 / (8.0 * math.pi ** 2 * G1 ** 2 * H0)
    profile = RadialAngularProfile(g, h, normalization, {'G1': G1, 'G2': G2}, {'H0': H0, 'H2': H2})

    mass = profile.total_mass()
    if abs(mass - 1.0) > NORMALIZATION_TOLERANCE:
        raise ValidationError(f"Profile normalisation {mass:.12g} misses 1 by more than {NORMALIZATION_TOLERANCE}",
                              ErrorContext("negstate", "build_profile", {'A0': normalization}))
    logger.info(f"Built momentum profile: A0={normalization:.10g}, G1={G1:.6g}, G2={G2:.6g}, H0={H0:.6g}")
    return profile
