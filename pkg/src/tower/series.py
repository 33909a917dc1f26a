"""
Certified weighted sums over mass towers.

Every convergent verdict comes with an enclosure: the partial sum over the
first R masses plus a rigorous bound on the tail taken from the tower's
analytic descriptor (geometric comparison for arithmetic tails, integral
comparison for logarithmic tails, the certified slope for custom tails).
Divergence is likewise decided by comparison, never by watching partial
sums stagnate.
"""

import logging
import math
from dataclasses import dataclass, replace, field
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple, Any

import numpy as np
from scipy.special import gammaincc, gammaln

from src.testfn.envelope import ExponentialEnvelope
from src.tower.spectrum import MassTower, TailKind
from src.utils.errors import ValidationError, ErrorContext

logger = logging.getLogger(__name__)

MAX_TERMS = 10_000_000
DEFAULT_RTOL = 1e-13
WITNESS_DECADES = 6
_BOUNDARY_TOLERANCE = 1e-12


class Weight(Enum):
    """Summand families K m^p e^{-s m} (and two special forms)."""
    F = "F"                          # e^{-4 beta m} / m^2
    G = "G"                          # e^{-beta m / 4}
    HALF = "half"                    # e^{-beta m / 2}
    DOUBLE = "double"                # e^{-2 beta m}
    PLAIN = "plain"                  # e^{-beta m}
    QUARTIC_PHI = "quartic_phi"      # m^4 phi(2 sqrt2 lambda m)^2
    LOG_PARTITION = "log_partition"  # |log(1 - e^{-beta m / 2})|
    STRETCHED = "stretched"          # m^4 e^{-(beta m)^alpha}


class SumStatus(Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    UNDETERMINED = "undetermined"


class Tristate(Enum):
    YES = "yes"
    NO = "no"
    UNDETERMINED = "undetermined"

    @classmethod
    def conjunction(cls, states: Iterable['Tristate']) -> 'Tristate':
        states = list(states)
        if cls.NO in states:
            return cls.NO
        if cls.UNDETERMINED in states:
            return cls.UNDETERMINED
        return cls.YES

    @classmethod
    def from_status(cls, status: SumStatus) -> 'Tristate':
        return {SumStatus.CONVERGENT: cls.YES, SumStatus.DIVERGENT: cls.NO}.get(status, cls.UNDETERMINED)


@dataclass(frozen=True)
class DivergenceWitness:
    """Partial sums at r = 10, 100, ... backing a comparison-test divergence."""
    term_counts: Tuple[int, ...]
    partial_sums: Tuple[float, ...]
    reason: str


@dataclass(frozen=True)
class SumVerdict:
    status: SumStatus
    value: float = math.nan
    remainder_bound: float = math.nan
    terms: int = 0
    witness: Optional[DivergenceWitness] = None
    reason: str = ""

    @property
    def convergent(self) -> bool:
        return self.status is SumStatus.CONVERGENT

    @property
    def divergent(self) -> bool:
        return self.status is SumStatus.DIVERGENT

    @property
    def undetermined(self) -> bool:
        return self.status is SumStatus.UNDETERMINED

    @property
    def lower(self) -> float:
        return self.value - self.remainder_bound if self.convergent else math.nan

    @property
    def upper(self) -> float:
        if self.divergent:
            return math.inf
        return self.value + self.remainder_bound if self.convergent else math.nan

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {'status': self.status.value, 'terms': self.terms}
        if self.convergent:
            record.update(value=self.value, remainder_bound=self.remainder_bound)
        if self.witness is not None:
            record['witness'] = {
                'term_counts': list(self.witness.term_counts),
                'partial_sums': list(self.witness.partial_sums),
                'reason': self.witness.reason,
            }
        if self.reason:
            record['reason'] = self.reason
        return record


@dataclass(frozen=True)
class WeightTerms:
    """
    Summand a(m) = prefactor * m^power * e^{-rate m}, with the special
    log-partition and stretched forms.

    ``tail_factor`` multiplies the exponential comparator used for tails;
    it is 1/(1 - e^{-beta m1/2}) for the log-partition weight and 1 otherwise.
    """
    weight: Weight
    prefactor: float = 1.0
    power: float = 0.0
    rate: float = 0.0
    beta: float = math.nan
    alpha: float = 1.0
    tail_factor: float = 1.0

    def __call__(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        if self.weight is Weight.LOG_PARTITION:
            return -np.log1p(-np.exp(-self.rate * m))
        if self.weight is Weight.STRETCHED:
            return m ** 4 * np.exp(-(self.beta * m) ** self.alpha)
        return self.prefactor * m ** self.power * np.exp(-self.rate * m)

    def comparator(self, m: float) -> float:
        """Upper comparator used for tail bounds, equal to a(m) except for log-partition."""
        if self.weight is Weight.LOG_PARTITION:
            return self.tail_factor * math.exp(-self.rate * m)
        return float(self(m))

    @property
    def monotone_from(self) -> float:
        """Mass beyond which the comparator is nonincreasing."""
        if self.weight is Weight.STRETCHED:
            return (4.0 / self.alpha) ** (1.0 / self.alpha) / self.beta
        return max(self.power, 0.0) / self.rate


def weight_terms(weight: Weight, beta: Optional[float] = None, lam: Optional[float] = None,
                 envelope: Optional[ExponentialEnvelope] = None,
                 alpha: Optional[float] = None) -> WeightTerms:
    """
    Resolve a weight family and its parameters into a summand.

    Raises:
        ValidationError: If a required parameter is missing or out of range.
    """
    context = ErrorContext("tower", "weighted_mass_sum", {'weight': weight.value})
    if weight is Weight.QUARTIC_PHI:
        if lam is None or not lam > 0:
            raise ValidationError(f"quartic_phi weight needs lambda > 0, got {lam}", context)
        if envelope is None:
            raise ValidationError("quartic_phi weight needs an envelope", context)
        # phi(2 sqrt2 lam m)^2 = kappa^2 e^{-4 sqrt2 lam beta0 m}
        return WeightTerms(weight, prefactor=envelope.kappa ** 2, power=4.0,
                           rate=4.0 * math.sqrt(2.0) * lam * envelope.beta0)

    if beta is None or not beta > 0:
        raise ValidationError(f"weight {weight.value} needs beta > 0, got {beta}", context)
    if weight is Weight.STRETCHED:
        if alpha is None or not 0.0 < alpha < 1.0:
            raise ValidationError(f"stretched weight needs 0 < alpha < 1, got {alpha}", context)
        return WeightTerms(weight, power=4.0, beta=beta, alpha=alpha)

    rates = {
        Weight.F: 4.0 * beta,
        Weight.G: beta / 4.0,
        Weight.HALF: beta / 2.0,
        Weight.DOUBLE: 2.0 * beta,
        Weight.PLAIN: beta,
        Weight.LOG_PARTITION: beta / 2.0,
    }
    power = -2.0 if weight is Weight.F else 0.0
    return WeightTerms(weight, power=power, rate=rates[weight], beta=beta)


def _progression_tail(terms: WeightTerms, m_next: float, step: float) -> float:
    """Bound sum_{j>=0} a(m_next + j step) for a comparator nonincreasing beyond m_next."""
    if terms.weight is Weight.STRETCHED:
        order = 5.0 / terms.alpha
        z = (terms.beta * m_next) ** terms.alpha
        integral = math.exp(gammaln(order) + math.log(max(gammaincc(order, z), 1e-300))
                            - math.log(terms.alpha) - 5.0 * math.log(terms.beta))
        return terms.comparator(m_next) + integral / step

    ratio = math.exp(-terms.rate * step) * max(1.0, ((m_next + step) / m_next) ** terms.power)
    if ratio >= 1.0:
        return math.inf
    return terms.comparator(m_next) / (1.0 - ratio)


def _log_tower_tail(terms: WeightTerms, last: int, d0: float, alpha_eff: float) -> float:
    """Bound sum_{r>last} a(log(r+1)/(2 d0)) by the integral from last to infinity."""
    y = math.log1p(last)
    p = terms.power
    scale = terms.tail_factor * terms.prefactor * (2.0 * d0) ** (-p)
    excess = alpha_eff - 1.0
    if abs(excess) <= _BOUNDARY_TOLERANCE:
        return scale * y ** (p + 1.0) / (-(p + 1.0))
    if p > 0:
        z = excess * y
        return scale * math.exp(gammaln(p + 1.0) + math.log(max(gammaincc(p + 1.0, z), 1e-300))
                                - (p + 1.0) * math.log(excess))
    return scale * y ** p * math.exp(-excess * y) / excess


def _witness(tower: MassTower, terms: WeightTerms, reason: str) -> DivergenceWitness:
    counts = tuple(10 ** k for k in range(1, WITNESS_DECADES + 1))
    partial = np.cumsum(terms(tower.masses(np.arange(1, counts[-1] + 1))))
    return DivergenceWitness(counts, tuple(float(partial[n - 1]) for n in counts), reason)


def _enclosure(partial: float, tail: float, count: int, reason: str = "") -> SumVerdict:
    # the tail lies in [0, tail]; report its midpoint
    return SumVerdict(SumStatus.CONVERGENT, value=partial + 0.5 * tail,
                      remainder_bound=0.5 * tail, terms=count, reason=reason)


def _sum_in_chunks(tower: MassTower, terms: WeightTerms, tail_at, first_tail_index: int,
                   rtol: float, max_terms: int) -> SumVerdict:
    """Sum in ascending r until tail_at(R) is below rtol of the partial sum."""
    partial, start, chunk = 0.0, 1, 1024
    while start <= max_terms:
        stop = min(start + chunk, max_terms + 1)
        partial += float(np.sum(terms(tower.masses(np.arange(start, stop)))))
        last = stop - 1
        if last >= first_tail_index:
            tail = tail_at(last)
            if tail == 0.0 or tail <= rtol * partial or stop > max_terms:
                logger.debug(f"{terms.weight.value} sum: {last} terms, partial={partial:.15g}, tail<={tail:.3e}")
                return _enclosure(partial, tail, last)
        start, chunk = stop, min(2 * chunk, 1 << 20)
    return SumVerdict(SumStatus.UNDETERMINED, terms=max_terms,
                      reason="monotone region of the summand not reached within the term cap")


def weighted_mass_sum(tower: MassTower, weight: Weight, beta: Optional[float] = None,
                      lam: Optional[float] = None, envelope: Optional[ExponentialEnvelope] = None,
                      alpha: Optional[float] = None, rtol: float = DEFAULT_RTOL,
                      max_terms: int = MAX_TERMS) -> SumVerdict:
    """
    Decide convergence of sum_r a(m_r) and enclose its value.

    Args:
        tower (MassTower): The spectrum.
        weight (Weight): Summand family.
        beta (float, optional): Inverse temperature, required except for quartic_phi.
        lam (float, optional): Rescaling factor for quartic_phi.
        envelope (ExponentialEnvelope, optional): Supplies phi for quartic_phi.
        alpha (float, optional): Stretching exponent for the stretched weight.
        rtol (float): Target tail bound relative to the partial sum.
        max_terms (int): Summation cap; convergent sums reaching it keep
            their (larger) rigorous remainder.

    Returns:
        SumVerdict: Convergent with value and remainder bound, Divergent with
        a witness, or Undetermined when the descriptor certifies neither.
    """
    weight = Weight(weight)
    terms = weight_terms(weight, beta=beta, lam=lam, envelope=envelope, alpha=alpha)
    if weight is Weight.LOG_PARTITION:
        terms = replace(terms, tail_factor=1.0 / -math.expm1(-terms.rate * tower.m1))

    if tower.kind is TailKind.FINITE:
        values = terms(np.asarray(tower.prefix))
        return SumVerdict(SumStatus.CONVERGENT, value=float(np.sum(values)), remainder_bound=0.0,
                          terms=len(values))

    if tower.kind is TailKind.CUSTOM:
        return _custom_sum(tower, terms)

    if tower.kind is TailKind.ARITHMETIC:
        m1 = tower.m1
        first = max(1, int(math.ceil(terms.monotone_from / m1)))
        return _sum_in_chunks(tower, terms, lambda last: _progression_tail(terms, (last + 1) * m1, m1),
                              first, rtol, max_terms)

    return _logarithmic_sum(tower, terms, rtol, max_terms)


def _custom_sum(tower: MassTower, terms: WeightTerms) -> SumVerdict:
    partial = float(np.sum(terms(np.asarray(tower.prefix))))
    count = len(tower.prefix)
    if tower.tail_slope is None:
        return SumVerdict(SumStatus.UNDETERMINED, terms=count,
                          reason="custom tail without a certified bound")
    m_next = tower.tail_slope * (count + 1)
    if m_next < terms.monotone_from:
        return SumVerdict(SumStatus.UNDETERMINED, terms=count,
                          reason="certified tail bound starts before the summand decreases")
    tail = _progression_tail(terms, m_next, tower.tail_slope)
    if not math.isfinite(tail):
        return SumVerdict(SumStatus.UNDETERMINED, terms=count, reason="tail comparison is not summable")
    return _enclosure(partial, tail, count, reason=f"tail bounded through m_r >= {tower.tail_slope:g} r")


def _logarithmic_sum(tower: MassTower, terms: WeightTerms, rtol: float, max_terms: int) -> SumVerdict:
    d0 = tower.d0
    if terms.weight is Weight.STRETCHED:
        reason = "e^{-(beta m_r)^alpha} decays slower than every power of r on a logarithmic tower"
        return SumVerdict(SumStatus.DIVERGENT, terms=10 ** WITNESS_DECADES,
                          witness=_witness(tower, terms, reason), reason=reason)

    # e^{-s m_r} = (r + 1)^{-alpha_eff}
    alpha_eff = terms.rate / (2.0 * d0)
    p = terms.power
    boundary = abs(alpha_eff - 1.0) <= _BOUNDARY_TOLERANCE
    if alpha_eff < 1.0 - _BOUNDARY_TOLERANCE or (boundary and p >= -1.0):
        reason = (f"terms dominate a multiple of log(r+1)^{p:g} (r+1)^-{alpha_eff:.6g}, "
                  f"a divergent comparison series")
        logger.debug(f"{terms.weight.value} diverges on {tower.describe()}: {reason}")
        return SumVerdict(SumStatus.DIVERGENT, terms=10 ** WITNESS_DECADES,
                          witness=_witness(tower, terms, reason), reason=reason)

    first = 1 if p <= 0 else max(1, int(math.ceil(math.exp(p / alpha_eff) - 1.0)))
    return _sum_in_chunks(tower, terms, lambda last: _log_tower_tail(terms, last, d0, alpha_eff),
                          first, rtol, max_terms)


@dataclass(frozen=True)
class StretchedSumReport:
    """Convergence of sum m_r^4 e^{-(beta m_r)^alpha} over an (alpha, beta) grid."""
    verdicts: Dict[Tuple[float, float], SumVerdict] = field(default_factory=dict)

    @property
    def holds(self) -> Tristate:
        return Tristate.conjunction(Tristate.from_status(v.status) for v in self.verdicts.values())


def stretched_sum_test(tower: MassTower, alphas: Iterable[float], betas: Iterable[float]) -> StretchedSumReport:
    """
    Check the condition a finite QEI for all finely controlled test functions
    imposes: sum m_r^4 e^{-(beta m_r)^alpha} < inf for every beta > 0, 0 < alpha < 1.
    """
    betas = list(betas)
    verdicts = {}
    for alpha in alphas:
        for beta in betas:
            verdicts[(alpha, beta)] = weighted_mass_sum(tower, Weight.STRETCHED, beta=beta, alpha=alpha)
    report = StretchedSumReport(verdicts)
    logger.info(f"Stretched-exponential condition on {tower.describe()}: {report.holds.value}")
    return report
