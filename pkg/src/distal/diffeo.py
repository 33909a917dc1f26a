"""Radial diffeomorphisms x -> psi(|x|) x/|x| of flat spatial slices and origin-centred balls."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.optimize import brentq

from src.utils.errors import ValidationError, NumericError, ErrorContext

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
RadialMap = Callable[[ArrayLike], ArrayLike]

MONOTONICITY_SAMPLES = 2001
IDENTITY_TOLERANCE = 1e-12
INVERSE_XTOL = 1e-15


@dataclass(frozen=True)
class Ball:
    """Open ball B(0, radius) in R^{d-1}."""
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError(f"ball radius must be positive, got {self.radius}",
                                  ErrorContext("distal", "Ball", {'radius': self.radius}))

    def scaled(self, lam: float) -> 'Ball':
        return Ball(lam * self.radius)


@dataclass(frozen=True)
class RadialDiffeo:
    """
    f(x) = psi(|x|) x/|x| with psi increasing, psi(0) = 0 and psi(r) = r for r >= cutoff.

    ``cutoff`` is infinite for global maps such as linear scalings, which are
    not compactly supported perturbations of the identity.

    Attributes:
        psi: Radial profile.
        psi_prime: Its derivative, strictly positive.
        cutoff: Radius beyond which psi is the identity.
        dimension: Spatial dimension d - 1.
        name: Label used in reports.
    """
    psi: RadialMap
    psi_prime: RadialMap
    cutoff: float = math.inf
    dimension: int = 3
    name: str = "radial"

    def __post_init__(self):
        context = ErrorContext("distal", "RadialDiffeo", {'name': self.name, 'cutoff': self.cutoff})
        if self.dimension < 1:
            raise ValidationError(f"dimension must be at least 1, got {self.dimension}", context)
        if not self.cutoff >= 0:
            raise ValidationError(f"cutoff must be nonnegative, got {self.cutoff}", context)
        if abs(float(self.psi(0.0))) > IDENTITY_TOLERANCE:
            raise ValidationError("psi(0) must vanish", context)

        extent = self.cutoff if math.isfinite(self.cutoff) else 10.0
        r = np.linspace(0.0, 1.5 * extent, MONOTONICITY_SAMPLES)
        slope = np.asarray(self.psi_prime(r), dtype=float)
        if not np.all(np.isfinite(slope)) or np.any(slope <= 0):
            where = r[np.argmin(np.nan_to_num(slope, nan=-np.inf))]
            raise ValidationError(f"psi' must be positive everywhere (fails near r={where:.6g})", context)
        if math.isfinite(self.cutoff):
            beyond = r[r >= self.cutoff]
            if np.max(np.abs(np.asarray(self.psi(beyond)) - beyond)) > IDENTITY_TOLERANCE * max(1.0, extent):
                raise ValidationError(f"psi must be the identity beyond r={self.cutoff}", context)

    @classmethod
    def identity(cls, dimension: int = 3) -> 'RadialDiffeo':
        return cls(lambda r: np.asarray(r, dtype=float) * 1.0,
                   lambda r: np.ones_like(np.asarray(r, dtype=float)),
                   cutoff=0.0, dimension=dimension, name="identity")

    @classmethod
    def linear(cls, factor: float, dimension: int = 3) -> 'RadialDiffeo':
        """Global scaling x -> factor x."""
        if not factor > 0:
            raise ValidationError(f"scaling factor must be positive, got {factor}")
        return cls(lambda r: factor * np.asarray(r, dtype=float),
                   lambda r: np.full_like(np.asarray(r, dtype=float), factor),
                   dimension=dimension, name=f"scale({factor:g})")

    def compose(self, inner: 'RadialDiffeo') -> 'RadialDiffeo':
        """self o inner."""
        if inner.dimension != self.dimension:
            raise ValidationError("cannot compose maps of different dimension")
        outer = self
        return RadialDiffeo(
            lambda r: outer.psi(inner.psi(r)),
            lambda r: outer.psi_prime(inner.psi(r)) * inner.psi_prime(r),
            cutoff=max(self.cutoff, inner.cutoff),
            dimension=self.dimension,
            name=f"{self.name} o {inner.name}",
        )

    def radial(self, r: ArrayLike) -> ArrayLike:
        return self.psi(r)

    def inverse(self, s: float) -> float:
        """psi^{-1}(s) by bracketed root finding, closed form on the identity tail."""
        if s < 0:
            raise ValidationError(f"radius must be nonnegative, got {s}")
        if s == 0:
            return 0.0
        if math.isfinite(self.cutoff) and s >= self.cutoff:
            return float(s)
        upper = self.cutoff if math.isfinite(self.cutoff) else max(s, 1.0)
        while float(self.psi(upper)) < s:
            upper *= 2.0
            if upper > 1e300:
                raise NumericError(f"psi never reaches {s}", ErrorContext("distal", "inverse", {'name': self.name}))
        return float(brentq(lambda r: float(self.psi(r)) - s, 0.0, upper, xtol=INVERSE_XTOL, rtol=4 * np.finfo(float).eps))

    def inverse_jacobian_norm(self, s: ArrayLike) -> np.ndarray:
        """
        Operator norm of D(f^{-1}) at radius s.

        The radial eigenvalue is 1/psi'(psi^{-1}(s)), the tangential one
        psi^{-1}(s)/s (multiplicity dimension - 1).
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        r = np.array([self.inverse(value) for value in s])
        radial = 1.0 / np.asarray(self.psi_prime(r), dtype=float)
        if self.dimension == 1:
            return radial
        return np.maximum(radial, r / s)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Apply f to points stacked along the last axis."""
        x = np.asarray(x, dtype=float)
        norm = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(invalid='ignore', divide='ignore'):
            scale = np.where(norm > 0, self.psi(norm) / norm, 1.0)
        return x * scale
