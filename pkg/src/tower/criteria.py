"""
Nuclearity, counting and thermodynamic criteria for mass towers.

The sums

    F(beta) = sum_r e^{-4 beta m_r} / m_r^2     (necessary condition)
    G(beta) = sum_r e^{-beta m_r / 4}            (sufficient condition)

decide whether a tower can satisfy the nuclearity criterion. Polynomial
growth in 1/beta is tested by a least-squares power-law fit over the
smallest decade of the probe grid.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Any

import numpy as np
from scipy.optimize import minimize_scalar

from src.tower.spectrum import MassTower, TailKind, MAX_RESOLVED_JUMPS, integrate_against_counting
from src.tower.series import SumVerdict, SumStatus, Tristate, Weight, weighted_mass_sum
from src.utils.errors import ValidationError, NumericError, ErrorContext

logger = logging.getLogger(__name__)

PROBE_POINTS = 13
PROBE_RANGE = (1e-3, 1.0)           # in units of 1 / m1
FIT_RESIDUAL_THRESHOLD = 0.05       # RMS residual of the log-log fit
IDENTITY_TAIL_TOLERANCE = 1e-10


def probe_grid(tower: MassTower, points: int = PROBE_POINTS) -> np.ndarray:
    """Inverse temperatures spanning [1e-3, 1] / m1, ascending."""
    lo, hi = PROBE_RANGE
    return np.logspace(math.log10(lo), math.log10(hi), points) / tower.m1


# ---------------------------------------------------------------------------
# Counting identity


@dataclass(frozen=True)
class IdentityCheck:
    """G(beta) against (beta/4) int e^{-beta u/4} N(u) du."""
    beta: float
    series: SumVerdict
    integral: float = math.nan
    tail_bound: float = math.nan
    residual: float = math.nan
    approximate: bool = False

    @property
    def status(self) -> SumStatus:
        return self.series.status

    @property
    def divergent(self) -> bool:
        return self.series.divergent


def _identity_cut(tower: MassTower, beta: float, target: float):
    """Upper limit U and a bound on the integral beyond it."""
    k = beta / 4.0
    if tower.kind is TailKind.FINITE:
        upper = tower.prefix[-1]
        return upper, len(tower.prefix) * math.exp(-k * upper)
    if tower.kind is TailKind.ARITHMETIC:
        upper = tower.m1 + 40.0 / k
        while (upper + 1.0 / k) * math.exp(-k * upper) / tower.m1 > target:
            upper += 10.0 / k
        return upper, (upper + 1.0 / k) * math.exp(-k * upper) / tower.m1
    if tower.kind is TailKind.LOGARITHMIC:
        excess = k - 2.0 * tower.d0
        upper = max(tower.m1, math.log(k / (excess * target)) / excess)
        return upper, k * math.exp(-excess * upper) / excess
    # custom tower with certified slope: N(u) <= K + u / slope
    upper = math.nextafter(tower.counting_limit, 0.0)
    count = len(tower.prefix)
    return upper, (count + (upper + 1.0 / k) / tower.tail_slope) * math.exp(-k * upper)


def counting_integral_identity_check(tower: MassTower, beta: float,
                                     tail_target: float = IDENTITY_TAIL_TOLERANCE) -> IdentityCheck:
    """
    Compare G(beta) with (beta/4) int_0^inf e^{-beta u/4} N(u) du.

    The integral is computed by Gauss-Legendre panels placed between the
    jumps of N plus an analytic bound on the part beyond the cut, so it is
    independent of the summation of G.

    Args:
        tower (MassTower): The spectrum.
        beta (float): Inverse temperature, > 0.
        tail_target (float): Bound aimed for on the truncated integral.

    Returns:
        IdentityCheck: Residual |G - integral|; a divergent G is returned
        with its witness and no residual.
    """
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    series = weighted_mass_sum(tower, Weight.G, beta=beta)
    if not series.convergent:
        logger.info(f"Counting identity at beta={beta}: G is {series.status.value}")
        return IdentityCheck(beta=beta, series=series)

    k = beta / 4.0
    upper, tail = _identity_cut(tower, beta, tail_target)
    result = integrate_against_counting(
        tower, lambda u: k * np.exp(-k * u), upper, order=8, max_width=2.0 / k,
        blind_width=min(1e-3, 0.5 / k),
        max_jumps=MAX_RESOLVED_JUMPS if tower.kind is TailKind.LOGARITHMIC else 10 ** 7,
    )
    integral = result.value + (tail if tower.kind is TailKind.FINITE else 0.5 * tail)
    residual = abs(series.value - integral)
    logger.info(f"Counting identity at beta={beta}: G={series.value:.12g}, integral={integral:.12g}, "
                f"residual={residual:.3e}")
    return IdentityCheck(beta=beta, series=series, integral=integral, tail_bound=tail,
                         residual=residual, approximate=result.approximate)


# ---------------------------------------------------------------------------
# Nuclearity classification


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    intercept: float
    rms_residual: float


def fit_power_law(betas: np.ndarray, values: np.ndarray) -> PowerLawFit:
    """Least squares of log(values) against log(1/beta)."""
    x = np.log(1.0 / np.asarray(betas))
    y = np.log(np.asarray(values))
    intercept, slope = np.polynomial.polynomial.polyfit(x, y, 1)
    residual = y - (intercept + slope * x)
    return PowerLawFit(float(slope), float(intercept), float(np.sqrt(np.mean(residual ** 2))))


@dataclass(frozen=True)
class ProbeRow:
    beta: float
    F: SumVerdict
    G: SumVerdict


@dataclass(frozen=True)
class NuclearityVerdict:
    necessary_holds: Tristate
    sufficient_holds: Tristate
    exponents: Optional[Dict[str, float]] = None
    probes: List[ProbeRow] = field(default_factory=list)
    fits: Dict[str, PowerLawFit] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'necessary_holds': self.necessary_holds.value,
            'sufficient_holds': self.sufficient_holds.value,
            'exponents': self.exponents,
            'fits': {name: {'exponent': fit.exponent, 'intercept': fit.intercept,
                            'rms_residual': fit.rms_residual} for name, fit in self.fits.items()},
        }


def _polynomial_growth(name: str, betas: np.ndarray, values: np.ndarray,
                       fits: Dict[str, PowerLawFit]) -> Tristate:
    """Power-law fit over the smallest-beta decade decides; the full fit is recorded."""
    fits[name] = fit_power_law(betas, values)
    decade = betas <= 10.0 * betas[0] * (1 + 1e-12)
    local = fit_power_law(betas[decade], values[decade])
    fits[f"{name}_small_beta"] = local
    return Tristate.YES if local.rms_residual < FIT_RESIDUAL_THRESHOLD else Tristate.NO


def classify_nuclearity(tower: MassTower, R: Optional[float] = None, C_const: float = 1.0,
                        betas: Optional[Sequence[float]] = None) -> NuclearityVerdict:
    """
    Evaluate the necessary (F) and sufficient (G) nuclearity conditions.

    Args:
        tower (MassTower): The spectrum.
        R (float, optional): Ball radius used to translate the G fit into the
            criterion's (n, beta0); default 2 / m1.
        C_const (float): Constant of the simplified index bound.
        betas (Sequence[float], optional): Probe grid, default 13 points
            log-spaced over [1e-3, 1] / m1.

    Returns:
        NuclearityVerdict: Both tri-states, the fitted exponents when the
        sufficient condition holds, and the probe table.
    """
    betas = np.sort(np.asarray(betas if betas is not None else probe_grid(tower), dtype=float))
    probes = [ProbeRow(float(b), weighted_mass_sum(tower, Weight.F, beta=b),
                       weighted_mass_sum(tower, Weight.G, beta=b)) for b in betas]
    fits: Dict[str, PowerLawFit] = {}

    def condition(name: str, verdicts: List[SumVerdict], transform) -> Tristate:
        states = [Tristate.from_status(v.status) for v in verdicts]
        overall = Tristate.conjunction(states)
        if overall is not Tristate.YES:
            return overall
        values = np.array([transform(v.value) for v in verdicts])
        return _polynomial_growth(name, betas, values, fits)

    # log F must grow polynomially: fit L = 1 + max(log F, 0)
    necessary = condition("F", [p.F for p in probes], lambda value: 1.0 + max(math.log(value), 0.0))
    sufficient = condition("G", [p.G for p in probes], lambda value: value)

    exponents = None
    if sufficient is Tristate.YES:
        R = 2.0 / tower.m1 if R is None else R
        fit = fits["G"]
        n = 4.0 + fit.exponent
        # C R^3 G / (m1 beta^4) ~ (beta0 / beta)^n
        beta0 = (C_const * R ** 3 * math.exp(fit.intercept) / tower.m1) ** (1.0 / n)
        exponents = {'n': n, 'beta0': beta0}

    logger.info(f"Nuclearity of {tower.describe()}: necessary={necessary.value}, sufficient={sufficient.value}")
    return NuclearityVerdict(necessary, sufficient, exponents, probes, fits)


# ---------------------------------------------------------------------------
# Index bounds


def _safe_exp(log_value: float) -> float:
    return math.exp(log_value) if log_value < 709.0 else math.inf


@dataclass(frozen=True)
class IndexBounds:
    """Logarithms of the three nuclearity-index bounds at one beta."""
    beta: float
    log_lower: float
    log_upper_exact: float
    log_upper_simplified: float

    @property
    def lower(self) -> float:
        return _safe_exp(self.log_lower)

    @property
    def upper_exact(self) -> float:
        return _safe_exp(self.log_upper_exact)

    @property
    def upper_simplified(self) -> float:
        return _safe_exp(self.log_upper_simplified)


def nuclearity_index_bounds(tower: MassTower, R: float, beta: float, c_const: float = 1.0,
                            C_const: float = 1.0, C_lower: float = 1.0) -> IndexBounds:
    """
    Lower bound (C_lower F)^{1/2}, diamond bound exp{c R^3/beta^3 sum |log(1-e^{-beta m/2})|}
    and its simplification exp{C R^3 G / (m1 beta^4)}.

    Raises:
        ValidationError: If R <= 1/m1 or a parameter is not positive.
    """
    context = ErrorContext("tower", "nuclearity_index_bounds", {'R': R, 'beta': beta})
    if not R > 1.0 / tower.m1:
        raise ValidationError(f"ball radius R={R} must exceed 1/m1={1.0 / tower.m1:.6g}", context)
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}", context)
    for name, value in (('c', c_const), ('C', C_const), ('C_lower', C_lower)):
        if not value > 0:
            raise ValidationError(f"constant {name} must be positive, got {value}", context)

    def log_of(verdict: SumVerdict, transform) -> float:
        if verdict.divergent:
            return math.inf
        if not verdict.convergent:
            return math.nan
        return transform(verdict.value)

    F = weighted_mass_sum(tower, Weight.F, beta=beta)
    log_partition = weighted_mass_sum(tower, Weight.LOG_PARTITION, beta=beta)
    G = weighted_mass_sum(tower, Weight.G, beta=beta)

    return IndexBounds(
        beta=beta,
        log_lower=log_of(F, lambda v: 0.5 * math.log(C_lower * v) if v > 0 else -math.inf),
        log_upper_exact=log_of(log_partition, lambda v: c_const * R ** 3 / beta ** 3 * v),
        log_upper_simplified=log_of(G, lambda v: C_const * R ** 3 * v / (tower.m1 * beta ** 4)),
    )


def index_bounds_profile(tower: MassTower, R: float, betas: Sequence[float], c_const: float = 1.0,
                         C_const: float = 1.0, C_lower: float = 1.0) -> List[IndexBounds]:
    """
    Index bounds along an ascending beta grid, each checked to be nonincreasing in beta.

    Raises:
        NumericError: If a finite bound increases with beta.
    """
    profile = [nuclearity_index_bounds(tower, R, b, c_const, C_const, C_lower) for b in sorted(betas)]
    for name in ('log_lower', 'log_upper_exact', 'log_upper_simplified'):
        values = [getattr(bounds, name) for bounds in profile]
        for previous, current, bounds in zip(values, values[1:], profile[1:]):
            if math.isfinite(previous) and current > previous + 1e-12 * max(1.0, abs(previous)):
                raise NumericError(
                    f"{name} increases with beta at beta={bounds.beta:.6g} ({previous:.12g} -> {current:.12g})",
                    ErrorContext("tower", "index_bounds_profile", {'tower': tower.describe()}),
                )
    return profile


# ---------------------------------------------------------------------------
# Tauberian bound


@dataclass(frozen=True)
class TauberianBound:
    beta_star: float
    log_bound: float

    @property
    def bound(self) -> float:
        return _safe_exp(self.log_bound)


def _check_positive(**params: float) -> None:
    for name, value in params.items():
        if not value > 0:
            raise ValidationError(f"{name} must be positive, got {value}")


def tauberian_log_raw(beta: float, n: float, beta0: float, A: float, v: float) -> float:
    """log of (A / beta^2) e^{(beta0/beta)^n + beta v}."""
    return math.log(A) - 2.0 * math.log(beta) + (beta0 / beta) ** n + beta * v


def tauberian_counting_bound(n: float, beta0: float, A: float, v: float) -> TauberianBound:
    """
    Evaluate N(v) <= (A/beta^2) e^{(beta0/beta)^n + beta v} at
    beta = beta0^{n/(n+1)} (n/v)^{1/(n+1)}.

    Args:
        n (float): Nuclearity exponent.
        beta0 (float): Nuclearity scale.
        A (float): Prefactor of the index bound.
        v (float): Energy.

    Returns:
        TauberianBound: The substituted beta and the bound (inf on overflow).
    """
    _check_positive(n=n, beta0=beta0, A=A, v=v)
    beta_star = beta0 ** (n / (n + 1.0)) * (n / v) ** (1.0 / (n + 1.0))
    return TauberianBound(beta_star, tauberian_log_raw(beta_star, n, beta0, A, v))


def minimize_tauberian(n: float, beta0: float, A: float, v: float) -> TauberianBound:
    """Numerical minimum of the raw two-parameter bound over beta."""
    _check_positive(n=n, beta0=beta0, A=A, v=v)
    guess = math.log(tauberian_counting_bound(n, beta0, A, v).beta_star)
    result = minimize_scalar(lambda x: tauberian_log_raw(math.exp(x), n, beta0, A, v),
                             bounds=(guess - 20.0, guess + 20.0), method='bounded',
                             options={'xatol': 1e-12})
    return TauberianBound(math.exp(result.x), float(result.fun))


def tauberian_constants(n: float, beta0: float, A: float) -> Dict[str, float]:
    """
    Constants of N(v) <= B v^{2/(n+1)} e^{C v^{n/(n+1)}} implied by the substituted beta.

    Returns:
        Dict[str, float]: {'B': ..., 'C': ...}.
    """
    _check_positive(n=n, beta0=beta0, A=A)
    p = n / (n + 1.0)
    C = beta0 ** p * (n ** (-p) + n ** (1.0 / (n + 1.0)))
    B = A * beta0 ** (-2.0 * p) * n ** (-2.0 / (n + 1.0))
    return {'B': B, 'C': C}


# ---------------------------------------------------------------------------
# Local normality


@dataclass(frozen=True)
class LocalNormalityReport:
    beta: float
    sufficient: SumVerdict
    necessary: SumVerdict
    locally_normal: Tristate
    all_temperatures: Tristate

    def to_dict(self) -> Dict[str, Any]:
        return {
            'beta': self.beta,
            'sufficient': self.sufficient.to_dict(),
            'necessary': self.necessary.to_dict(),
            'locally_normal': self.locally_normal.value,
            'all_temperatures': self.all_temperatures.value,
        }


def local_normality_verdict(tower: MassTower, beta: float,
                            probe_betas: Optional[Sequence[float]] = None) -> LocalNormalityReport:
    """
    Sufficient (sum e^{-beta m/2}) and necessary (sum e^{-2 beta m}) conditions
    for locally normal thermal states at beta; local normality at every
    temperature is read off F over the probe grid.
    """
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    sufficient = weighted_mass_sum(tower, Weight.HALF, beta=beta)
    necessary = weighted_mass_sum(tower, Weight.DOUBLE, beta=beta)

    if sufficient.convergent:
        state = Tristate.YES
    elif necessary.divergent:
        state = Tristate.NO
    else:
        state = Tristate.UNDETERMINED

    betas = probe_betas if probe_betas is not None else probe_grid(tower)
    all_temperatures = Tristate.conjunction(
        Tristate.from_status(weighted_mass_sum(tower, Weight.F, beta=b).status) for b in betas
    )
    logger.info(f"Local normality of {tower.describe()} at beta={beta}: {state.value} "
                f"(all temperatures: {all_temperatures.value})")
    return LocalNormalityReport(beta, sufficient, necessary, state, all_temperatures)
