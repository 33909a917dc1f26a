"""
Quantum energy inequality lower bounds.

A single free field of mass m obeys, for every normalised Hadamard state,

    <rho * |g|^2> >= -C int_m^inf u^d |g_hat(u)|^2 du,

and a tower of independent fields obeys the same bound with the step
function theta(u - m) replaced by the counting function N(u).

Both integrals run over [lower, inf) in doubling segments: the upper limit
is pushed out until one segment adds less than 1e-10 of the running total;
after 20 doublings, or on a non-finite value, the bound is declared
divergent.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Dict, Any

import numpy as np
from scipy.integrate import quad, IntegrationWarning

from src.quadrature import panel_rule_on_breaks
from src.tower.spectrum import MassTower, MAX_RESOLVED_JUMPS
from src.utils.errors import ValidationError, NumericError, ErrorContext

logger = logging.getLogger(__name__)

Transform = Callable[[np.ndarray], np.ndarray]

TAIL_RTOL = 1e-10
MAX_DOUBLINGS = 20
SAMPLE_POINTS = 201
PANEL_ORDER = 20
PANEL_WIDTH = 0.5
SEGMENT_PANELS = 512


@dataclass(frozen=True)
class QeiBound:
    """A nonpositive lower bound, or -inf when the integral diverges."""
    value: float
    dimension: int
    constant: float
    divergent: bool = False
    error: float = 0.0
    integrand_samples: Tuple[np.ndarray, np.ndarray] = (np.zeros(0), np.zeros(0))
    approximate: bool = False
    diagnostic: str = ""

    @property
    def magnitude(self) -> float:
        return -self.value

    def to_dict(self) -> Dict[str, Any]:
        return {
            'value': self.value,
            'dimension': self.dimension,
            'constant': self.constant,
            'divergent': self.divergent,
            'error': self.error,
            'approximate': self.approximate,
            'diagnostic': self.diagnostic,
        }


def _validate(d: int, C: float, lower: float, operation: str) -> None:
    context = ErrorContext("qei", operation, {'d': d, 'C': C})
    if not C > 0:
        raise ValidationError(f"QEI constant C must be positive, got {C}", context)
    if int(d) != d or d < 2:
        raise ValidationError(f"dimension d must be an integer >= 2, got {d}", context)
    if not lower >= 0:
        raise ValidationError(f"lower limit must be nonnegative, got {lower}", context)


def _doubling_integral(segment: Callable[[float, float], Tuple[float, float, bool]], lower: float,
                       rtol: float, max_doublings: int):
    """
    Sum segment integrals over [lower, lower + 1], [lower + 1, lower + 3], ...

    Returns:
        (total, error, upper, approximate, diagnostic) with total = inf when divergent.
    """
    total, error, approximate = 0.0, 0.0, False
    width, start, zero_segments = 1.0, lower, 0
    for doubling in range(max_doublings + 1):
        stop = start + width
        increment, inc_error, approx = segment(start, stop)
        approximate |= approx
        if not math.isfinite(increment):
            return math.inf, math.inf, stop, approximate, f"non-finite integrand on [{start:.6g}, {stop:.6g}]"
        total += increment
        error += inc_error
        if total > 0 and abs(increment) < rtol * abs(total):
            return total, error, stop, approximate, ""
        zero_segments = zero_segments + 1 if total == 0 and increment == 0 else 0
        if zero_segments >= 3:
            return 0.0, error, stop, approximate, "integrand vanishes numerically"
        start, width = stop, 2.0 * width
    return (math.inf, math.inf, start, approximate,
            f"tail increments did not fall below {rtol:g} of the total within {max_doublings} doublings")


def _samples(integrand: Callable[[np.ndarray], np.ndarray], lower: float, upper: float):
    u = np.linspace(lower, min(upper, lower + 1e3), SAMPLE_POINTS)
    with np.errstate(over='ignore', invalid='ignore'):
        return u, np.asarray(integrand(u), dtype=float)


def single_field_bound(g_transform: Transform, m: float, d: int = 4, C: float = 1.0,
                       rtol: float = TAIL_RTOL, max_doublings: int = MAX_DOUBLINGS) -> QeiBound:
    """
    -C int_m^inf u^d |g_hat(u)|^2 du by adaptive quadrature with a tail test.

    Args:
        g_transform (Transform): Even real transform evaluator.
        m (float): Mass, >= 0.
        d (int): Spacetime dimension, >= 2.
        C (float): QEI constant, > 0.

    Returns:
        QeiBound: The bound, divergent when the tail test fails.
    """
    _validate(d, C, m, "single_field_bound")

    def integrand(u):
        return u ** d * np.asarray(g_transform(u), dtype=float) ** 2

    def scalar(u: float) -> float:
        return float(integrand(u))

    def segment(a: float, b: float):
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                value, err = quad(scalar, a, b, limit=200, epsabs=0.0, epsrel=1e-12)
                return value, err, False
            except IntegrationWarning as e:
                logger.debug(f"quad warning on [{a:.4g}, {b:.4g}]: {e}")
        # noise-level tails cannot meet a pure relative tolerance
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            value, err = quad(scalar, a, b, limit=1000)
        return value, err, True

    total, error, upper, approximate, diagnostic = _doubling_integral(segment, m, rtol, max_doublings)
    samples = _samples(integrand, m, upper)
    if not math.isfinite(total):
        logger.info(f"Single-field QEI bound at m={m} diverges: {diagnostic}")
        return QeiBound(-math.inf, d, C, True, math.inf, samples, diagnostic=diagnostic)
    logger.debug(f"Single-field QEI bound at m={m}: {-C * total:.12g} (upper limit {upper:.4g})")
    return QeiBound(-C * total, d, C, False, C * error, samples, approximate, diagnostic)


def counting_bound(g_transform: Transform, counting: Callable[[np.ndarray], np.ndarray],
                   d: int = 4, C: float = 1.0, lower: float = 0.0,
                   jumps: Optional[Callable[[float, float], Optional[np.ndarray]]] = None,
                   rtol: float = TAIL_RTOL, max_doublings: int = MAX_DOUBLINGS) -> QeiBound:
    """
    -C int_lower^inf u^d N(u) |g_hat(u)|^2 du for a monotone counting function.

    Args:
        g_transform (Transform): Vectorized transform evaluator.
        counting (Callable): Vectorized N(u).
        d (int): Spacetime dimension.
        C (float): QEI constant.
        lower (float): Start of the integration, below which N vanishes.
        jumps (Callable, optional): jumps(a, b) returns the discontinuities of
            N inside (a, b), or None when they are too dense to resolve.

    Returns:
        QeiBound: The bound; approximate when jumps had to be ignored.
    """
    _validate(d, C, lower, "counting_bound")

    def integrand(u):
        with np.errstate(over='ignore', invalid='ignore'):
            return u ** d * counting(u) * np.asarray(g_transform(u), dtype=float) ** 2

    def segment(a: float, b: float):
        points = jumps(a, b) if jumps is not None else np.zeros(0)
        inner = points[(points > a) & (points < b)] if points is not None else np.zeros(0)
        breaks = np.concatenate([[a], inner, [b]])
        width = max(PANEL_WIDTH, (b - a) / SEGMENT_PANELS)
        fine_nodes, fine_weights = panel_rule_on_breaks(breaks, PANEL_ORDER, width)
        coarse_nodes, coarse_weights = panel_rule_on_breaks(breaks, PANEL_ORDER // 2, width)
        fine = float(integrand(fine_nodes) @ fine_weights)
        coarse = float(integrand(coarse_nodes) @ coarse_weights)
        return fine, abs(fine - coarse), points is None

    total, error, upper, approximate, diagnostic = _doubling_integral(segment, lower, rtol, max_doublings)
    samples = _samples(integrand, lower, upper)
    if not math.isfinite(total):
        logger.info(f"Counting QEI bound diverges: {diagnostic}")
        return QeiBound(-math.inf, d, C, True, math.inf, samples, approximate, diagnostic)
    return QeiBound(-C * total, d, C, False, C * error, samples, approximate, diagnostic)


def tower_jumps(tower: MassTower, max_jumps: int = MAX_RESOLVED_JUMPS):
    """jumps(a, b) callback resolving the masses of a tower while they are sparse."""
    def jumps(a: float, b: float) -> Optional[np.ndarray]:
        if b >= tower.counting_limit:
            return None
        try:
            count = tower.counting(b) - tower.counting(a)
        except NumericError:
            return None
        if count > max_jumps:
            return None
        return tower.jump_points(b)
    return jumps


def tower_bound(g_transform: Transform, tower: MassTower, d: int = 4, C: float = 1.0) -> QeiBound:
    """
    -C int_0^inf u^d N(u) |g_hat(u)|^2 du with N the tower's counting function.

    The integral starts at the mass gap m1 (N vanishes below it) and places
    panel boundaries on the masses while fewer than 20000 fall in a segment.
    """
    if tower.kind.value == "custom" and tower.tail_slope is None:
        raise ValidationError("tower QEI bound needs a certified tail for custom towers",
                              ErrorContext("qei", "tower_bound", {'tower': tower.describe()}))

    def counting(u):
        if tower.kind.value == "custom":
            # N(u) <= K + u / slope beyond the listed masses
            inside = u < tower.counting_limit
            n = np.empty_like(u)
            n[inside] = tower.counting_array(u[inside])
            n[~inside] = len(tower.prefix) + u[~inside] / tower.tail_slope
            return n
        return tower.counting_array(u)

    bound = counting_bound(g_transform, counting, d=d, C=C, lower=tower.m1, jumps=tower_jumps(tower))
    logger.info(f"Tower QEI bound on {tower.describe()}: {bound.value:.12g}"
                + (" (divergent)" if bound.divergent else ""))
    return bound
