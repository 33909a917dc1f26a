"""Mass spectra of countable free-field towers and their counting functions."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from src.quadrature import gauss_legendre_panels, panel_rule_on_breaks
from src.utils.errors import ValidationError, NumericError, ErrorContext

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

CONSISTENCY_TERMS = 100
CONSISTENCY_TOLERANCE = 1e-12
MAX_RESOLVED_JUMPS = 20000


class TailKind(Enum):
    """Analytic descriptor of the tail of a mass sequence."""
    FINITE = "finite"
    ARITHMETIC = "arithmetic"      # m_r = r m1
    LOGARITHMIC = "logarithmic"    # m_r = log(r + 1) / (2 d0)
    CUSTOM = "custom"              # listed prefix, optional certified m_r >= slope * r beyond it


@dataclass(frozen=True)
class MassTower:
    """
    Nondecreasing masses m_1 <= m_2 <= ... with mass gap m_1 > 0.

    ``prefix`` holds the enumerated masses of finite and custom towers; for
    arithmetic and logarithmic towers it may hold user-listed masses that
    are checked against the closed form.
    """
    kind: TailKind
    m1: float
    d0: Optional[float] = None
    prefix: Tuple[float, ...] = ()
    tail_slope: Optional[float] = None

    def __post_init__(self):
        context = ErrorContext("tower", "MassTower", {'kind': self.kind.value})
        if not self.m1 > 0:
            raise ValidationError(f"mass gap violated: m1={self.m1}", context)
        if any(b < a for a, b in zip(self.prefix, self.prefix[1:])):
            raise ValidationError("masses must be nondecreasing", context)
        if self.kind in (TailKind.FINITE, TailKind.CUSTOM):
            if not self.prefix:
                raise ValidationError(f"{self.kind.value} tower needs at least one mass", context)
            if self.prefix[0] != self.m1:
                raise ValidationError("m1 must be the first listed mass", context)
        if self.kind is TailKind.LOGARITHMIC and not (self.d0 is not None and self.d0 > 0):
            raise ValidationError(f"logarithmic tower needs d0 > 0, got {self.d0}", context)
        if self.tail_slope is not None:
            if self.kind is not TailKind.CUSTOM:
                raise ValidationError("tail_bound applies to custom towers only", context)
            if not self.tail_slope > 0:
                raise ValidationError(f"tail_bound slope must be positive, got {self.tail_slope}", context)
        if self.kind in (TailKind.ARITHMETIC, TailKind.LOGARITHMIC) and self.prefix:
            n = min(len(self.prefix), CONSISTENCY_TERMS)
            expected = self.masses(np.arange(1, n + 1))
            if np.max(np.abs(np.asarray(self.prefix[:n]) - expected)) > CONSISTENCY_TOLERANCE:
                raise ValidationError("listed masses are inconsistent with the tail descriptor", context)

    @classmethod
    def finite(cls, masses: Sequence[float]) -> 'MassTower':
        masses = tuple(float(m) for m in masses)
        if not masses:
            raise ValidationError("finite tower needs at least one mass")
        return cls(TailKind.FINITE, masses[0], prefix=masses)

    @classmethod
    def arithmetic(cls, m1: float) -> 'MassTower':
        return cls(TailKind.ARITHMETIC, float(m1))

    @classmethod
    def logarithmic(cls, d0: float) -> 'MassTower':
        if not d0 > 0:
            raise ValidationError(f"logarithmic tower needs d0 > 0, got {d0}")
        return cls(TailKind.LOGARITHMIC, math.log(2.0) / (2.0 * d0), d0=float(d0))

    @classmethod
    def custom(cls, masses: Sequence[float], tail_slope: Optional[float] = None) -> 'MassTower':
        masses = tuple(float(m) for m in masses)
        if not masses:
            raise ValidationError("custom tower needs at least one mass")
        return cls(TailKind.CUSTOM, masses[0], prefix=masses, tail_slope=tail_slope)

    @property
    def is_finite(self) -> bool:
        return self.kind is TailKind.FINITE

    @property
    def size(self) -> Optional[int]:
        """Number of fields, None for infinite towers."""
        return len(self.prefix) if self.is_finite else None

    @property
    def counting_limit(self) -> float:
        """Largest u for which counting is exact."""
        if self.kind is TailKind.CUSTOM:
            limit = self.prefix[-1]
            if self.tail_slope is not None:
                limit = max(limit, self.tail_slope * (len(self.prefix) + 1))
            return limit
        if self.kind is TailKind.LOGARITHMIC:
            return 700.0 / (2.0 * self.d0)
        return math.inf

    def masses(self, r: ArrayLike) -> np.ndarray:
        """m_r for 1-based indices r."""
        r = np.asarray(r)
        if np.any(r < 1):
            raise ValidationError("mass indices start at 1")
        if self.kind is TailKind.ARITHMETIC:
            return r * self.m1
        if self.kind is TailKind.LOGARITHMIC:
            return np.log1p(r.astype(float)) / (2.0 * self.d0)
        if np.any(r > len(self.prefix)):
            raise ValidationError(f"mass index beyond the {len(self.prefix)} enumerated masses")
        return np.asarray(self.prefix)[r.astype(int) - 1]

    def counting(self, u: float) -> int:
        """
        Exact N(u) = #{r : m_r <= u}.

        Args:
            u (float): Energy threshold, u >= 0.

        Returns:
            int: Number of masses not exceeding u.

        Raises:
            ValidationError: For negative u, or beyond the certified range of a custom tower.
            NumericError: When a logarithmic count overflows.
        """
        if u < 0:
            raise ValidationError(f"counting needs u >= 0, got {u}")
        if u < self.m1:
            return 0
        if self.kind in (TailKind.FINITE, TailKind.CUSTOM):
            if u >= self.counting_limit:
                raise ValidationError(
                    f"u={u} lies beyond the certified range of the custom tower",
                    ErrorContext("tower", "counting", {'limit': self.counting_limit}),
                )
            return int(np.searchsorted(self.prefix, u, side='right'))

        if self.kind is TailKind.ARITHMETIC:
            n = int(math.floor(u / self.m1))
        else:
            if 2.0 * self.d0 * u > 700.0:
                raise NumericError(f"Counting function overflows at u={u}")
            n = int(math.floor(math.expm1(2.0 * self.d0 * u)))
        # floating fix-up of the closed-form inverse
        while float(self.masses(n + 1)) <= u:
            n += 1
        while n > 0 and float(self.masses(n)) > u:
            n -= 1
        return n

    def counting_array(self, u: ArrayLike) -> np.ndarray:
        """Vectorized N(u) as floats (inf where a logarithmic count overflows)."""
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValidationError("counting needs u >= 0")
        if self.kind in (TailKind.FINITE, TailKind.CUSTOM):
            if np.any(u >= self.counting_limit):
                raise ValidationError("u lies beyond the certified range of the custom tower")
            return np.searchsorted(self.prefix, u, side='right').astype(float)

        with np.errstate(over='ignore', invalid='ignore'):
            if self.kind is TailKind.ARITHMETIC:
                n = np.floor(u / self.m1)
                n += (n + 1) * self.m1 <= u
                n -= (n * self.m1 > u) & (n > 0)
            else:
                scale = 2.0 * self.d0
                n = np.floor(np.expm1(scale * u))
                finite = np.isfinite(n)
                n[finite] += np.log1p(n[finite] + 1) / scale <= u[finite]
                lower = finite & (n > 0)
                n[lower] -= np.log1p(n[lower]) / scale > u[lower]
        return np.where(u < self.m1, 0.0, n)

    def jump_points(self, u_max: float) -> np.ndarray:
        """Distinct masses in [m1, u_max], the discontinuities of N."""
        if self.kind in (TailKind.FINITE, TailKind.CUSTOM):
            points = np.asarray(self.prefix)
            return np.unique(points[points <= u_max])
        count = self.counting(u_max)
        if count == 0:
            return np.zeros(0)
        return np.unique(self.masses(np.arange(1, count + 1)))

    def describe(self) -> str:
        if self.kind is TailKind.ARITHMETIC:
            return f"arithmetic tower m_r = {self.m1:g} r"
        if self.kind is TailKind.LOGARITHMIC:
            return f"logarithmic tower m_r = log(r+1)/(2*{self.d0:g})"
        return f"{self.kind.value} tower with {len(self.prefix)} listed masses"


@dataclass(frozen=True)
class CountingIntegral:
    """Result of integrating a smooth function against N(u)."""
    value: float
    jumps_resolved: int
    approximate: bool


def integrate_against_counting(tower: MassTower, integrand: Callable[[np.ndarray], np.ndarray],
                               upper: float, order: int = 8, max_width: float = math.inf,
                               max_jumps: int = MAX_RESOLVED_JUMPS,
                               blind_width: Optional[float] = None) -> CountingIntegral:
    """
    Integrate integrand(u) N(u) over [m1, upper].

    Panels never straddle a mass while at most ``max_jumps`` masses lie below
    ``upper``. Beyond that the remaining range is covered by uniform panels
    that ignore the (dense) jumps and the result is flagged approximate.

    Args:
        tower (MassTower): Supplies N and its jump points.
        integrand (Callable): Smooth vectorized weight.
        upper (float): Upper limit.
        order (int): Gauss-Legendre nodes per panel.
        max_width (float): Longest panel between two jumps.
        max_jumps (int): Jump-resolution budget.
        blind_width (float, optional): Panel width past the budget, default max_width or 1e-3.

    Returns:
        CountingIntegral: Value and how the jumps were treated.
    """
    if upper <= tower.m1:
        return CountingIntegral(0.0, 0, False)

    if tower.counting(upper) <= max_jumps:
        breaks = np.append(tower.jump_points(upper), upper)
        nodes, weights = panel_rule_on_breaks(breaks, order, max_width)
        resolved, approximate = breaks.size - 1, False
    else:
        knee = float(tower.masses(max_jumps))
        breaks = np.unique(tower.masses(np.arange(1, max_jumps + 1)))
        width = blind_width or (max_width if math.isfinite(max_width) else 1e-3)
        near_nodes, near_weights = panel_rule_on_breaks(breaks, order, max_width)
        far_nodes, far_weights = gauss_legendre_panels(knee, upper, max(1, int(math.ceil((upper - knee) / width))), order)
        nodes = np.concatenate([near_nodes, far_nodes])
        weights = np.concatenate([near_weights, far_weights])
        resolved, approximate = max_jumps, True
        logger.debug(f"Counting integral: {max_jumps} jumps resolved, blind panels on [{knee:.4g}, {upper:.4g}]")

    value = float((integrand(nodes) * tower.counting_array(nodes)) @ weights)
    return CountingIntegral(value, resolved, approximate)


def build_tower(kind: str, m1: Optional[float] = None, d0: Optional[float] = None,
                masses: Optional[Sequence[float]] = None,
                tail_bound: Optional[dict] = None) -> MassTower:
    """
    Build a tower from a configuration-style description.

    Args:
        kind (str): "finite", "arithmetic", "logarithmic" or "custom".
        m1 (float, optional): Mass gap; required for arithmetic towers and
            checked against the closed form for logarithmic ones.
        d0 (float, optional): Logarithmic spacing parameter.
        masses (Sequence[float], optional): Listed masses.
        tail_bound (dict, optional): {"slope": s} certifying m_r >= s r for custom towers.

    Returns:
        MassTower: The validated tower.
    """
    try:
        kind = TailKind(kind)
    except ValueError as e:
        raise ValidationError(f"unknown tower type: {kind}") from e

    prefix = tuple(float(m) for m in masses) if masses else ()
    if kind is TailKind.FINITE:
        return MassTower.finite(prefix)
    if kind is TailKind.CUSTOM:
        slope = None
        if tail_bound is not None:
            if set(tail_bound) != {'slope'}:
                raise ValidationError(f"tail_bound must be {{'slope': value}}, got keys {sorted(tail_bound)}")
            slope = float(tail_bound['slope'])
        return MassTower.custom(prefix, tail_slope=slope)
    if kind is TailKind.ARITHMETIC:
        if m1 is None:
            raise ValidationError("arithmetic tower needs m1")
        return MassTower(TailKind.ARITHMETIC, float(m1), prefix=prefix)

    if d0 is None or not d0 > 0:
        raise ValidationError(f"logarithmic tower needs d0 > 0, got {d0}")
    tower = MassTower(TailKind.LOGARITHMIC, math.log(2.0) / (2.0 * d0), d0=float(d0), prefix=prefix)
    if m1 is not None and abs(m1 - tower.m1) > CONSISTENCY_TOLERANCE:
        raise ValidationError(f"m1={m1} is inconsistent with d0={d0} (expected {tower.m1:.15g})")
    return tower
