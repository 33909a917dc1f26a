"""
Splitting-distance calculus under radial diffeomorphisms.

For a diffeomorphism f with bounded derivatives and a region S,

    d(S) <= inf{rho > 0 : B(f(S), r) subset f(B(S, rho))},   r = d(f(S)),

and d(S) <= kappa d(f(S)) with kappa the supremum of ||D(f^{-1})|| over
B(f(S), r) minus f(S). Only origin-centred balls and radial maps are handled,
where the infimum becomes psi^{-1}(psi(R) + r) - R.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Dict, Any, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from src.distal.diffeo import RadialDiffeo, Ball
from src.utils.errors import ValidationError, TheoremViolationError, ErrorContext

logger = logging.getLogger(__name__)

KAPPA_GRID = 257
SHRINK_AMPLITUDE = 0.55       # psi(R + d/2) = R + 1.05 d
SHRINK_ITERATIONS = 40


def _check_positive(operation: str, **params: float) -> None:
    for name, value in params.items():
        if not value > 0:
            raise ValidationError(f"{name} must be positive, got {value}",
                                  ErrorContext("distal", operation, {name: value}))


def covering_radius(f: RadialDiffeo, S: Ball, r: float, slack: float = 0.0) -> float:
    """
    inf{rho > 0 : B(f(S), r) subset f(B(S, rho))} for an origin-centred ball.

    Args:
        f (RadialDiffeo): Radial map.
        S (Ball): Region.
        r (float): Collar width around f(S), r > 0.
        slack (float): Additive allowance standing in for suppressed epsilons.

    Returns:
        float: psi^{-1}(psi(R) + r) - R + slack.
    """
    _check_positive("covering_radius", r=r)
    if slack < 0:
        raise ValidationError(f"slack must be nonnegative, got {slack}")
    R = S.radius
    if R >= f.cutoff:
        return r + slack
    return f.inverse(float(f.psi(R)) + r) - R + slack


def derivative_kappa(f: RadialDiffeo, S: Ball, r: float) -> float:
    """
    sup ||D(f^{-1})|| over the annulus psi(R) < s <= psi(R) + r.

    A uniform grid locates the largest sample, then a bounded scalar search
    refines it between the neighbouring grid points.
    """
    _check_positive("derivative_kappa", r=r)
    inner = float(f.psi(S.radius))
    grid = np.linspace(inner, inner + r, KAPPA_GRID)[1:]
    values = f.inverse_jacobian_norm(grid)
    best = int(np.argmax(values))
    kappa = float(values[best])

    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    if hi > lo:
        result = minimize_scalar(lambda s: -float(f.inverse_jacobian_norm(s)[0]), bounds=(lo, hi),
                                 method='bounded', options={'xatol': 1e-12})
        kappa = max(kappa, -float(result.fun))
    logger.debug(f"kappa of {f.name} on ({inner:.6g}, {inner + r:.6g}]: {kappa:.12g}")
    return kappa


def _transition(x: np.ndarray) -> np.ndarray:
    """Smooth step from 0 (x <= 0) to 1 (x >= 1); slope at most 2."""
    x = np.asarray(x, dtype=float)
    left = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    right = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return left / (left + right)


def _transition_prime(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    y = np.where(inside, x, 0.5)
    q = 1.0 / y - 1.0 / (1.0 - y)
    dq = -1.0 / y ** 2 - 1.0 / (1.0 - y) ** 2
    # S = 1/(1 + e^q); e^q/(1 + e^q)^2 is even in q
    e = np.exp(-np.abs(q))
    slope = -dq * e / (1.0 + e) ** 2
    return np.where(inside, slope, 0.0)


@dataclass(frozen=True)
class ShrinkResult:
    """Constructed map and the dichotomy it implies."""
    diffeo: RadialDiffeo
    ball: Ball
    d_S: float
    covering: float
    psi_at_half: float
    bound_trace: List[float] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.covering <= 0.5 * self.d_S

    @property
    def conclusion(self) -> str:
        return "d(S) in {0, inf}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'radius': self.ball.radius,
            'd_S': self.d_S,
            'psi_at_half': self.psi_at_half,
            'covering_radius': self.covering,
            'implied_bound': 0.5 * self.d_S,
            'holds': self.holds,
            'bound_trace': list(self.bound_trace),
            'conclusion': self.conclusion,
        }


def shrink_construction(S: Ball, d_S: float, iterations: int = SHRINK_ITERATIONS) -> ShrinkResult:
    """
    Build psi with psi = id on [0, R], psi(R + d_S/2) >= R + d_S and psi = id beyond R + 2 d_S.

    psi(s) = s + 0.55 d_S beta(s), where beta rises smoothly from 0 to 1 on
    [R, R + d_S/2] and falls back to 0 on [R + d_S/2, R + 2 d_S]; the falling
    edge has slope at most 2 * 0.55 / 1.5 < 1, so psi stays increasing.
    f fixes S, and B(S, d_S) lies inside f(B(S, d_S/2)); with d(f(S)) = d(S)
    this gives d(S) <= d(S)/2, so iterating forces d(S) = 0 or d(S) = inf.

    Raises:
        TheoremViolationError: If the constructed map fails its own constraints.
    """
    _check_positive("shrink_construction", d_S=d_S)
    R = S.radius
    rise, fall = 0.5 * d_S, 1.5 * d_S
    amplitude = SHRINK_AMPLITUDE * d_S

    def bump(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= R + rise, _transition((s - R) / rise), 1.0 - _transition((s - R - rise) / fall))

    def bump_prime(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= R + rise, _transition_prime((s - R) / rise) / rise,
                        -_transition_prime((s - R - rise) / fall) / fall)

    diffeo = RadialDiffeo(lambda s: np.asarray(s, dtype=float) + amplitude * bump(s),
                          lambda s: 1.0 + amplitude * bump_prime(s),
                          cutoff=R + 2.0 * d_S, name=f"shrink(R={R:g}, d={d_S:g})")

    context = ErrorContext("distal", "shrink_construction", {'R': R, 'd_S': d_S})
    psi_at_half = float(diffeo.psi(R + rise))
    if psi_at_half < R + d_S or float(diffeo.psi(R)) != R:
        raise TheoremViolationError(f"shrinking map misses its constraints: psi(R + d/2) = {psi_at_half}", context)
    covering = covering_radius(diffeo, S, d_S)
    if covering > rise:
        raise TheoremViolationError(f"covering radius {covering} exceeds d_S/2 = {rise}", context)

    trace = [d_S / 2.0 ** k for k in range(iterations + 1)]
    logger.info(f"Shrink construction on R={R}: covering radius {covering:.12g} <= {rise:.12g}")
    return ShrinkResult(diffeo, S, d_S, covering, psi_at_half, trace)


@dataclass(frozen=True)
class ScalingBound:
    lam: float
    d_S: float
    kappa: float

    @property
    def bound(self) -> float:
        """Upper bound on d(lam S)."""
        return self.kappa * self.d_S

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': self.lam,
            'd_S': self.d_S,
            'kappa': self.kappa,
            'bound': self.bound,
            'uniform_distance': 0.0,
        }


def scaling_bound(S: Ball, lam: float, d_S: float) -> ScalingBound:
    """
    d(lam S) <= lam d(S) via f(x) = x/lam, which maps lam S onto S.

    If the splitting distance were one uniform d0 for every ball, the bound
    d0 <= lam d0 for all lam in (0, 1) leaves only d0 = 0.
    """
    _check_positive("scaling_bound", lam=lam, d_S=d_S)
    f = RadialDiffeo.linear(1.0 / lam)
    kappa = derivative_kappa(f, S.scaled(lam), d_S)
    if abs(kappa - lam) > 1e-10 * max(1.0, lam):
        raise TheoremViolationError(f"scaling by {lam} gave kappa={kappa}",
                                    ErrorContext("distal", "scaling_bound", {'lambda': lam}))
    return ScalingBound(lam, d_S, kappa)


def distal_model_band(d0: float, r: float) -> Tuple[float, float]:
    """Splitting distances d0 <= d(r) <= 2 d0 of the logarithmic-spectrum model, independent of r."""
    _check_positive("distal_model_band", d0=d0, r=r)
    return d0, 2.0 * d0


def describe_band(d0: float, r: float) -> Dict[str, Any]:
    lower, upper = distal_model_band(d0, r)
    return {
        'r': r,
        'lower': lower,
        'upper': upper,
        'width': upper - lower,
        'max_temperature': 1.0 / lower,
        'text': (f"splitting distance lies in [{lower:g}, {upper:g}] for every r; "
                 f"1/d0 = {1.0 / lower:g} is of the order of the maximum temperature"),
    }
