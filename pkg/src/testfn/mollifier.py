"""Compactly supported bumps and their self-convolutions."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from src.quadrature import gauss_legendre_panels, integrate_panels, _reference_rule
from src.utils.errors import ValidationError, ErrorContext

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class MollifierShape(Enum):
    """Supported bump profiles on |s| < 1, s = t / a."""
    BUMP = "bump"                  # exp(-1/(1-s^2))
    SQUARED_BUMP = "squared_bump"  # exp(-2/(1-s^2))

    @property
    def exponent(self) -> float:
        return 1.0 if self is MollifierShape.BUMP else 2.0


@dataclass(frozen=True)
class Mollifier:
    """Even, smooth, nonnegative bump vanishing for |t| >= support_radius."""
    support_radius: float
    shape: MollifierShape = MollifierShape.BUMP

    # Composite rule used for every integral over the support.
    panels: int = 16
    order: int = 16

    def __post_init__(self):
        if not self.support_radius > 0:
            raise ValidationError(
                f"Mollifier support radius must be positive, got {self.support_radius}",
                ErrorContext("testfn", "make_mollifier", {'support_radius': self.support_radius}),
            )

    def __call__(self, t: ArrayLike) -> np.ndarray:
        s = np.asarray(t, dtype=float) / self.support_radius
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        out[inside] = np.exp(-self.shape.exponent / (1.0 - s[inside] ** 2))
        return out

    def integral(self) -> float:
        a = self.support_radius
        return integrate_panels(self, -a, a, order=self.order, n_panels=self.panels, rtol=1e-14).value

    def transform(self, u: ArrayLike) -> np.ndarray:
        """chi_hat(u) = int chi(t) cos(ut) dt, exact for the even real bump."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        a = self.support_radius
        # resolve the oscillation: at most ~2 radians per panel
        panels = max(self.panels, int(np.ceil(np.max(np.abs(u)) * a)) if u.size else 0)
        nodes, weights = gauss_legendre_panels(-a, a, panels, self.order)
        wf = weights * self(nodes)
        return np.cos(np.outer(u, nodes)) @ wf


def make_mollifier(support_radius: float = 1.0, shape: Union[str, MollifierShape] = "bump") -> Mollifier:
    """
    Build the default bump chi supported on [-a, a].

    Args:
        support_radius (float): The radius a > 0.
        shape (str): One of "bump", "squared_bump".

    Returns:
        Mollifier: The bump.

    Raises:
        ValidationError: If the radius is not positive or the shape is unknown.
    """
    try:
        shape = MollifierShape(shape) if not isinstance(shape, MollifierShape) else shape
    except ValueError as e:
        raise ValidationError(f"Unknown mollifier shape: {shape}") from e
    return Mollifier(support_radius=float(support_radius), shape=shape)


@dataclass(frozen=True)
class SelfConvolution:
    """eta = chi * chi: even, nonnegative, with eta_hat = chi_hat^2 >= 0."""
    chi: Mollifier
    panels: int = 16
    order: int = 16

    @property
    def support_radius(self) -> float:
        return 2.0 * self.chi.support_radius

    def __call__(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        flat = np.abs(t.ravel())
        a = self.chi.support_radius
        out = np.zeros_like(flat)
        inside = flat < 2.0 * a
        if np.any(inside):
            tt = flat[inside]
            # overlap of [-a, a] and [t - a, t + a] for t >= 0
            lo, hi = tt - a, np.full_like(tt, a)
            ref_nodes, ref_weights = _reference_rule(self.order)
            edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, self.panels + 1)[None, :]
            half = 0.5 * np.diff(edges, axis=1)
            mid = edges[:, :-1] + half
            s = mid[:, :, None] + half[:, :, None] * ref_nodes[None, None, :]
            w = half[:, :, None] * ref_weights[None, None, :]
            out[inside] = np.sum(w * self.chi(s) * self.chi(tt[:, None, None] - s), axis=(1, 2))
        return out.reshape(t.shape)

    def integral(self) -> float:
        return self.chi.integral() ** 2

    def transform(self, u: ArrayLike) -> np.ndarray:
        return self.chi.transform(u) ** 2

    def direct_transform(self, u: ArrayLike) -> np.ndarray:
        """eta_hat by quadrature of eta itself, independent of chi_hat."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        r = self.support_radius
        result = integrate_panels(
            lambda t: self(t)[None, :] * np.cos(np.outer(u, t)),
            -r, r, order=self.order, n_panels=max(8, int(np.ceil(np.max(np.abs(u)) * r))),
            rtol=1e-12, atol=1e-14,
        )
        return np.atleast_1d(result.value)


def self_convolve(chi: Mollifier) -> SelfConvolution:
    """
    Form eta = chi * chi.

    Args:
        chi (Mollifier): A valid mollifier.

    Returns:
        SelfConvolution: eta with doubled support radius.
    """
    logger.debug(f"Self-convolving {chi.shape.value} mollifier of radius {chi.support_radius}")
    return SelfConvolution(chi=chi)
