"""
Computable forms of the two theorems linking QEIs with nuclearity.

QEI -> nuclearity: a tower QEI with polynomial scaling Q(lambda) <= C lambda^{-n}
for the rescaled test functions forces sum_r m_r^4 phi(2 sqrt2 lambda m_r)^2
to converge for every lambda, hence sum e^{-4 sqrt2 beta m_r} < inf for every
beta (local normality at all temperatures), and bounds G(beta) polynomially
(the nuclearity criterion).

Nuclearity -> QEI: the criterion's exponent n bounds the counting function
sub-exponentially, which admits QEI bounds for transforms decaying like
e^{-gamma |u|^alpha} with alpha > n/(n+1).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Any

import numpy as np

from src.qei.bounds import tower_bound
from src.testfn.averaging import TestFunction, rescale
from src.testfn.envelope import ExponentialEnvelope, DecayFit, DecayClass, kappa_envelope, verify_envelope
from src.tower.spectrum import MassTower
from src.tower.series import Weight, SumVerdict, Tristate, weighted_mass_sum
from src.tower.criteria import NuclearityVerdict, probe_grid, tauberian_constants
from src.utils.errors import ValidationError, NumericError, TheoremViolationError, ErrorContext

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = (1.0, 0.5, 0.25, 0.125)
DOMAIN_TOLERANCE = 1e-12
MIN_EXPONENT = 1e-6
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ScalingFit:
    """
    Polynomial scaling Q(lambda) <= C_fit lambda^{-n_fit} on a decreasing grid.

    When the sampled values are attached, the bound is checked on every grid point.
    """
    C_fit: float
    n_fit: float
    lambda_grid: Tuple[float, ...]
    q_values: Tuple[float, ...] = ()

    def __post_init__(self):
        context = ErrorContext("qei", "ScalingFit", {'C_fit': self.C_fit, 'n_fit': self.n_fit})
        if not self.C_fit > 0 or not self.n_fit > 0:
            raise ValidationError("ScalingFit needs C_fit > 0 and n_fit > 0", context)
        grid = np.asarray(self.lambda_grid, dtype=float)
        if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) >= 0):
            raise ValidationError("lambda_grid must be positive and strictly decreasing", context)
        if self.q_values:
            if len(self.q_values) != grid.size:
                raise ValidationError("q_values must match lambda_grid", context)
            if np.any(np.asarray(self.q_values) > self(grid) * (1.0 + 1e-12)):
                raise ValidationError("Q(lambda) exceeds C_fit lambda^-n_fit on the grid", context)

    def __call__(self, lam):
        return self.C_fit * np.asarray(lam, dtype=float) ** (-self.n_fit)

    @classmethod
    def power_law(cls, C_fit: float, n_fit: float,
                  lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> 'ScalingFit':
        return cls(float(C_fit), float(n_fit), tuple(float(x) for x in lambda_grid))

    @classmethod
    def fit(cls, lambda_grid: Sequence[float], q_values: Sequence[float]) -> 'ScalingFit':
        """
        Least-squares exponent, with C_fit raised until the fit dominates every sample.

        Raises:
            NumericError: If a sample is not finite and positive.
        """
        lam = np.asarray(lambda_grid, dtype=float)
        q = np.asarray(q_values, dtype=float)
        if lam.size < 2:
            raise ValidationError("A scaling fit needs at least two lambda values")
        bad = ~(np.isfinite(q) & (q > 0))
        if np.any(bad):
            raise NumericError(f"Q(lambda) is not finite and positive at lambda={lam[bad].tolist()}")
        order = np.argsort(-lam)
        lam, q = lam[order], q[order]
        slope, _ = np.polyfit(np.log(lam), np.log(q), 1)
        n_fit = max(-float(slope), MIN_EXPONENT)
        C_fit = float(np.max(q * lam ** n_fit)) * (1.0 + 1e-12)
        return cls(C_fit, n_fit, tuple(lam.tolist()), tuple(q.tolist()))


def compute_scaling(f: TestFunction, tower: MassTower,
                    lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                    d: int = 4, C: float = 1.0) -> ScalingFit:
    """
    Q(lambda) := |tower_bound(f_hat_lambda)| on the grid, fitted by a power law.

    Raises:
        NumericError: If the tower bound diverges for some lambda.
    """
    values = []
    for lam in lambda_grid:
        bound = tower_bound(rescale(f, lam).transform, tower, d=d, C=C)
        if bound.divergent:
            raise NumericError(f"Tower QEI bound diverges at lambda={lam}: {bound.diagnostic}",
                               ErrorContext("qei", "compute_scaling", {'lambda': lam}))
        values.append(bound.magnitude)
        logger.debug(f"Q({lam:g}) = {bound.magnitude:.10g}")
    fit = ScalingFit.fit(lambda_grid, values)
    logger.info(f"Scaling fit on {tower.describe()}: Q(lambda) <= {fit.C_fit:.6g} lambda^-{fit.n_fit:.4f}")
    return fit


def qei_mass_sum_test(envelope: ExponentialEnvelope, tower: MassTower,
                      lambda_grid: Sequence[float]) -> Dict[float, SumVerdict]:
    """sum_r m_r^4 phi(2 sqrt2 lambda m_r)^2 for each lambda on the grid."""
    verdicts = {float(lam): weighted_mass_sum(tower, Weight.QUARTIC_PHI, lam=lam, envelope=envelope)
                for lam in lambda_grid}
    divergent = [lam for lam, verdict in verdicts.items() if verdict.divergent]
    if divergent:
        logger.info(f"QEI mass sum diverges on {tower.describe()} for lambda in {divergent}")
    return verdicts


@dataclass(frozen=True)
class PipelineReport:
    """Combined conclusion of the QEI -> nuclearity chain."""
    applicable: bool
    reason: str
    verdict: NuclearityVerdict
    locally_normal_all_temperatures: Tristate
    hypotheses_hold: Tristate = Tristate.UNDETERMINED
    hypothesis_sums: List[Tuple[float, SumVerdict]] = field(default_factory=list)
    scaling: Optional[ScalingFit] = None
    implied_G_bounds: List[Tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        record = {
            'applicable': self.applicable,
            'reason': self.reason,
            'hypotheses_hold': self.hypotheses_hold.value,
            'locally_normal_all_temperatures': self.locally_normal_all_temperatures.value,
            'nuclearity': self.verdict.to_dict(),
            'hypothesis_sums': [{'beta': beta, **verdict.to_dict()} for beta, verdict in self.hypothesis_sums],
            'implied_G_bounds': [{'beta': beta, 'bound': bound} for beta, bound in self.implied_G_bounds],
        }
        if self.scaling is not None:
            record['scaling'] = {'C_fit': self.scaling.C_fit, 'n_fit': self.scaling.n_fit,
                                 'lambda_grid': list(self.scaling.lambda_grid),
                                 'q_values': list(self.scaling.q_values)}
        return record


def _undetermined(reason: str, **kwargs) -> PipelineReport:
    verdict = NuclearityVerdict(Tristate.UNDETERMINED, Tristate.UNDETERMINED)
    return PipelineReport(reason=reason, verdict=verdict,
                          locally_normal_all_temperatures=Tristate.UNDETERMINED, **kwargs)


def qei_to_nuclearity_pipeline(f: TestFunction, tower: MassTower, Q: Optional[ScalingFit] = None,
                               envelope: Optional[ExponentialEnvelope] = None,
                               decay: Optional[DecayFit] = None, gamma: Optional[float] = None,
                               betas: Optional[Sequence[float]] = None,
                               lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                               d: int = 4, C: float = 1.0, R: Optional[float] = None,
                               C_const: float = 1.0) -> PipelineReport:
    """
    Run the QEI -> local normality -> nuclearity chain on a tower.

    Args:
        f (TestFunction): Averaging function with an exponential envelope.
        tower (MassTower): The spectrum.
        Q (ScalingFit, optional): Supplied scaling; computed from tower_bound when None.
        envelope (ExponentialEnvelope, optional): Lower envelope of f_hat; certified
            when None, swept against f_hat otherwise. The chain applies only
            when f_hat stays above it.
        decay (DecayFit, optional): Decay classification of user-supplied
            transform samples standing in for f_hat; a non-exponential class
            makes the chain inapplicable.
        gamma (float, optional): Negative-energy constant; the default state's when None.
        betas (Sequence[float], optional): Probe temperatures, default probe_grid(tower).
        d (int): Spacetime dimension for a computed Q.
        C (float): QEI constant for a computed Q.
        R (float, optional): Ball radius for the criterion's beta0, default 2 / m1.
        C_const (float): Constant of the simplified index bound.

    Returns:
        PipelineReport: The nuclearity verdict and the local-normality conclusion.
    """
    if decay is not None and decay.decay_class is not DecayClass.EXPONENTIAL:
        reason = f"transform decay is {decay.decay_class.value}, not exponential: the theorem does not apply"
        logger.info(reason)
        return _undetermined(reason, applicable=False)

    try:
        if envelope is None:
            envelope = kappa_envelope(f)
        else:
            verify_envelope(f, envelope)
    except TheoremViolationError as e:
        reason = f"no certified exponential lower envelope for f: {e}"
        logger.info(reason)
        return _undetermined(reason, applicable=False)

    betas = np.sort(np.asarray(betas if betas is not None else probe_grid(tower), dtype=float))
    sums = [(float(b), weighted_mass_sum(tower, Weight.PLAIN, beta=4.0 * _SQRT2 * b)) for b in betas]
    hypotheses = Tristate.conjunction(Tristate.from_status(v.status) for _, v in sums)
    if hypotheses is Tristate.NO:
        beta = next(b for b, v in sums if v.divergent)
        reason = (f"sum of exp(-4 sqrt2 beta m_r) diverges at beta={beta:.6g}: "
                  f"the hypotheses of the theorem cannot hold")
        logger.info(f"{tower.describe()}: {reason}")
        return _undetermined(reason, applicable=True, hypotheses_hold=hypotheses, hypothesis_sums=sums)
    if hypotheses is Tristate.UNDETERMINED:
        return _undetermined("convergence of the mass sums could not be decided",
                             applicable=True, hypotheses_hold=hypotheses, hypothesis_sums=sums)

    if Q is None:
        try:
            Q = compute_scaling(f, tower, lambda_grid, d=d, C=C)
        except NumericError as e:
            return _undetermined(f"no finite QEI scaling: {e}", applicable=True,
                                 hypotheses_hold=Tristate.NO, hypothesis_sums=sums)
    if gamma is None:
        from src.negstate.kernel import default_gamma
        gamma = default_gamma()

    # G(beta) <= C_fit (16 sqrt2 beta0 / beta)^n / (Gamma kappa^2 m1^4)
    m1, kappa, beta0 = tower.m1, envelope.kappa, envelope.beta0
    prefactor = Q.C_fit * (16.0 * _SQRT2 * beta0) ** Q.n_fit / (gamma * kappa ** 2 * m1 ** 4)
    implied = [(float(b), float(prefactor * b ** (-Q.n_fit))) for b in betas]

    R = 2.0 / m1 if R is None else R
    n = 4.0 + Q.n_fit
    exponents = {'n': n, 'beta0': (C_const * R ** 3 * prefactor / m1) ** (1.0 / n), 'n_Q': Q.n_fit}
    verdict = NuclearityVerdict(Tristate.YES, Tristate.YES, exponents)
    logger.info(f"QEI pipeline on {tower.describe()}: nuclearity criterion fulfilled with n={n:.4f}")
    return PipelineReport(True, "nuclearity criterion fulfilled", verdict, Tristate.YES,
                          hypotheses, sums, Q, implied)


@dataclass(frozen=True)
class DomainVerdict:
    admissible: bool
    reason: str
    alpha_threshold: float
    C: float
    gamma_threshold: float

    def to_dict(self) -> Dict[str, Any]:
        return {'admissible': self.admissible, 'reason': self.reason, 'alpha_threshold': self.alpha_threshold,
                'C': self.C, 'gamma_threshold': self.gamma_threshold}


def nuclearity_to_qei_domain(n: float, gamma: float, alpha: float, beta0: float = 1.0,
                             A: float = 1.0) -> DomainVerdict:
    """
    Decide whether g_hat(u) = O(e^{-gamma |u|^alpha}) admits a QEI under the criterion with exponent n.

    Admissible for alpha > n/(n+1); at alpha = n/(n+1) exactly when gamma
    exceeds the constant C of the Tauberian counting bound.
    """
    for name, value in (('n', n), ('gamma', gamma), ('alpha', alpha)):
        if not value > 0:
            raise ValidationError(f"{name} must be positive, got {value}",
                                  ErrorContext("qei", "nuclearity_to_qei_domain", {name: value}))
    threshold = n / (n + 1.0)
    C = tauberian_constants(n, beta0, A)['C']
    if alpha > threshold + DOMAIN_TOLERANCE:
        return DomainVerdict(True, f"alpha={alpha:g} > n/(n+1)={threshold:.6g}", threshold, C, C)
    if abs(alpha - threshold) <= DOMAIN_TOLERANCE:
        if gamma > C:
            return DomainVerdict(True, f"alpha = n/(n+1) and gamma={gamma:g} > C={C:.6g}", threshold, C, C)
        return DomainVerdict(False, f"alpha = n/(n+1) but gamma={gamma:g} <= C={C:.6g}", threshold, C, C)
    return DomainVerdict(False, f"alpha={alpha:g} < n/(n+1)={threshold:.6g}", threshold, C, C)


def counting_envelope(n: float, beta0: float = 1.0, A: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Synthetic N(v) = B v^{2/(n+1)} e^{C v^{n/(n+1)}} saturating the Tauberian bound."""
    constants = tauberian_constants(n, beta0, A)
    B, C = constants['B'], constants['C']

    def counting(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        with np.errstate(over='ignore'):
            return B * v ** (2.0 / (n + 1.0)) * np.exp(C * v ** (n / (n + 1.0)))
    return counting


@dataclass(frozen=True)
class TowerStateBound:
    """Upper bound -Gamma sum m_r^4 phi(2 sqrt2 m_r)^2 on the infimum of averaged energies."""
    value: float
    remainder_bound: float
    verdict: SumVerdict

    def to_dict(self) -> Dict[str, Any]:
        return {'value': self.value, 'remainder_bound': self.remainder_bound, 'sum': self.verdict.to_dict()}


def tower_state_lower_bound(tower: MassTower, envelope: ExponentialEnvelope, gamma: float) -> TowerStateBound:
    """
    Most negative averaged energy density reachable by finite-excitation tower states.

    Raises:
        ValidationError: If m1 <= m0 or gamma <= 0.
    """
    context = ErrorContext("qei", "tower_state_lower_bound", {'m1': tower.m1, 'm0': envelope.m0})
    if not tower.m1 > envelope.m0:
        raise ValidationError(f"tower gap m1={tower.m1} must exceed the envelope cutoff m0={envelope.m0}", context)
    if not gamma > 0:
        raise ValidationError(f"gamma must be positive, got {gamma}", context)
    verdict = weighted_mass_sum(tower, Weight.QUARTIC_PHI, lam=1.0, envelope=envelope)
    if verdict.divergent:
        return TowerStateBound(-math.inf, math.inf, verdict)
    if verdict.undetermined:
        return TowerStateBound(math.nan, math.nan, verdict)
    return TowerStateBound(-gamma * verdict.value, gamma * verdict.remainder_bound, verdict)
