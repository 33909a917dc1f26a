"""
Averaged energy density of the vacuum-plus-two-particle state

    Psi = N [Omega + lambda/sqrt2 int b(k, k') a*(k) a*(k') Omega],

    b(k, k') = phi(2 sqrt2 m) / m^3 B(k/m, k'/m),
    c(k, k') = phi(2 sqrt2 m)^2 / m^3 C(k/m, k'/m),

averaged in time against f:

    E = |N|^2 int d^3k d^3k'/(2 pi)^6 (w w')^{-1/2}
        [ lambda^2 c (w w' + k.k' + m^2) f_hat(w' - w)
          - lambda/sqrt2 b (w w' + k.k' - m^2) f_hat(w + w') ].

Substituting k = m u and integrating out the orientation of the pair leaves
m^6 / (8 pi^4) int rho^2 rho'^2 drho drho' dc; the cosine enters the
brackets linearly, so the c-integral reduces to the moments int A, int c A
(first term) and int h, int c h (second term).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Dict, Any, Optional, Sequence, Tuple

import numpy as np

from src.quadrature import gauss_legendre_panels
from src.testfn.averaging import TestFunction
from src.testfn.envelope import ExponentialEnvelope
from src.negstate.profile import RadialAngularProfile, RADIAL_SUPPORT, ANGULAR_SUPPORT
from src.negstate.kernel import KernelC, derive_kernel, optimize_lambda, gamma_constant, energy_quadratic
from src.utils.errors import (
    ValidationError,
    QuadratureError,
    TheoremViolationError,
    ErrorContext,
)

logger = logging.getLogger(__name__)

ENERGY_RTOL = 1e-6
QUAD_ORDER = 8
MAX_PANELS = 64
MIN_MC_SAMPLES = 10_000
MC_BATCH = 1 << 16
KINEMATIC_TOLERANCE = 1e-12
TRANSFORM_SLACK = 1e-9
_SQRT2 = math.sqrt(2.0)
_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class StatePacket:
    """Parameters of Psi_{m, lambda}; no Fock vectors are materialised."""
    m: float
    lam: float
    envelope: ExponentialEnvelope
    kernel: KernelC

    def __post_init__(self):
        context = ErrorContext("negstate", "StatePacket", {'m': self.m, 'lambda': self.lam})
        if not self.m > self.envelope.m0:
            raise ValidationError(f"mass m={self.m} must exceed the envelope cutoff m0={self.envelope.m0}", context)
        if not self.lam >= 0:
            raise ValidationError(f"lambda must be nonnegative, got {self.lam}", context)

    @property
    def profile(self) -> RadialAngularProfile:
        return self.kernel.profile

    @property
    def phi(self) -> float:
        """phi(2 sqrt2 m)."""
        return self.envelope(2.0 * _SQRT2 * self.m)

    @property
    def normalization_sq(self) -> float:
        return 1.0 / (1.0 + self.lam ** 2 * self.phi ** 2 * self.kernel.trace)

    @property
    def normalization(self) -> float:
        return math.sqrt(self.normalization_sq)

    def amplitude(self, k: np.ndarray, k_p: np.ndarray) -> np.ndarray:
        """Two-particle amplitude b(k, k')."""
        return self.phi / self.m ** 3 * self.profile(np.asarray(k) / self.m, np.asarray(k_p) / self.m)

    def correlation(self, k: np.ndarray, k_p: np.ndarray) -> np.ndarray:
        """c(k, k')."""
        return self.phi ** 2 / self.m ** 3 * self.kernel(np.asarray(k) / self.m, np.asarray(k_p) / self.m)


def brackets(m: float, rho, rho_p, c):
    """
    Frequencies and the two kinematic brackets divided by sqrt(w w').

    Returns:
        (w, w', first, second) with first = (w w' + k.k' + m^2)/sqrt(w w')
        and second = (w w' + k.k' - m^2)/sqrt(w w'), k = m rho.
    """
    omega = m * np.sqrt(1.0 + np.asarray(rho, dtype=float) ** 2)
    omega_p = m * np.sqrt(1.0 + np.asarray(rho_p, dtype=float) ** 2)
    product = omega * omega_p
    root = np.sqrt(product)
    dot = m ** 2 * rho * rho_p * c
    return omega, omega_p, (product + dot + m ** 2) / root, (product + dot - m ** 2) / root


@dataclass(frozen=True)
class EnergyQuadResult:
    value: float
    positive_term: float
    negative_term: float
    error_estimate: float
    trace: List[Dict[str, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'value': self.value,
            'positive_term': self.positive_term,
            'negative_term': self.negative_term,
            'error_estimate': self.error_estimate,
        }


def _resolve_kernel(profile: RadialAngularProfile, kernel: Optional[KernelC]) -> KernelC:
    if kernel is None:
        return derive_kernel(profile)
    if kernel.profile is not profile:
        raise ValidationError("kernel was derived from a different profile")
    return kernel


def _check_transform_bounds(state: StatePacket, f_diff: np.ndarray, f_sum: np.ndarray) -> None:
    """f_hat(w' - w) <= 1 everywhere and f_hat(w + w') >= phi(2 sqrt2 m) on supp b."""
    context = ErrorContext("negstate", "averaged_energy", {'m': state.m})
    if np.max(f_diff) > 1.0 + TRANSFORM_SLACK:
        raise TheoremViolationError(f"f_hat(w' - w) reaches {np.max(f_diff):.12g} > 1", context)
    if np.min(f_sum) < state.phi * (1.0 - TRANSFORM_SLACK):
        raise TheoremViolationError(
            f"f_hat(w + w') = {np.min(f_sum):.6e} falls below phi(2 sqrt2 m) = {state.phi:.6e}", context)


def _quadrature_level(state: StatePacket, f: TestFunction, panels: int) -> Tuple[float, float]:
    m, lam, kernel = state.m, state.lam, state.kernel
    profile = kernel.profile
    rho, w_rho = gauss_legendre_panels(*RADIAL_SUPPORT, panels, QUAD_ORDER)
    c_full, w_full = gauss_legendre_panels(-1.0, 1.0, 2 * panels, QUAD_ORDER)
    c_b, w_b = gauss_legendre_panels(*ANGULAR_SUPPORT, panels, QUAD_ORDER)

    A = kernel.angular_factor(c_full)
    S0, S1 = float(w_full @ A), float(w_full @ (c_full * A))
    h = profile.h(c_b)
    T0, T1 = float(w_b @ h), float(w_b @ (c_b * h))

    radial = w_rho * rho ** 2 * profile.g(rho)
    r, r_p = rho[:, None], rho[None, :]
    # brackets at c = 0 and c = 1 give the affine dependence on the cosine
    omega, omega_p, first0, second0 = brackets(m, r, r_p, 0.0)
    _, _, first1, _ = brackets(m, r, r_p, 1.0)
    slope = first1 - first0
    f_diff = f.transform(omega_p - omega)
    f_sum = f.transform(omega + omega_p)
    _check_transform_bounds(state, f_diff, f_sum)

    jacobian = m ** 6 / (8.0 * math.pi ** 4)
    positive = radial @ ((first0 * S0 + slope * S1) * f_diff) @ radial
    negative = radial @ ((second0 * T0 + slope * T1) * f_sum) @ radial
    n_sq = state.normalization_sq
    positive *= n_sq * jacobian * lam ** 2 * state.phi ** 2 / m ** 3 * kernel.prefactor
    negative *= -n_sq * jacobian * lam / _SQRT2 * state.phi / m ** 3 * profile.normalization
    return float(positive), float(negative)


def averaged_energy(m: float, lam: float, f: TestFunction, profile: RadialAngularProfile,
                    envelope: ExponentialEnvelope, kernel: Optional[KernelC] = None,
                    rtol: float = ENERGY_RTOL, max_panels: int = MAX_PANELS) -> EnergyQuadResult:
    """
    Time-averaged energy density of Psi_{m, lambda} by refined tensor Gauss-Legendre.

    Args:
        m (float): Mass, above envelope.m0.
        lam (float): Two-particle admixture, >= 0.
        f (TestFunction): Averaging function.
        profile (RadialAngularProfile): Momentum profile B.
        envelope (ExponentialEnvelope): Supplies phi.
        kernel (KernelC, optional): C kernel of the profile, derived when None.
        rtol (float): Agreement required between successive panel doublings.

    Returns:
        EnergyQuadResult: Both contributions and the last level difference.

    Raises:
        QuadratureError: If the levels do not agree by max_panels.
        TheoremViolationError: If f_hat breaks the bounds used by the estimate.
    """
    kernel = _resolve_kernel(profile, kernel)
    state = StatePacket(m, lam, envelope, kernel)
    if lam == 0:
        return EnergyQuadResult(0.0, 0.0, 0.0, 0.0)

    trace: List[Dict[str, float]] = []
    previous = None
    panels = 4
    while panels <= max_panels:
        positive, negative = _quadrature_level(state, f, panels)
        if previous is not None:
            error = abs(positive - previous[0]) + abs(negative - previous[1])
            scale = abs(positive) + abs(negative)
            trace.append({'panels': panels, 'value': positive + negative, 'difference': error})
            if error <= rtol * scale:
                logger.debug(f"Energy at m={m}, lambda={lam:.6g}: {positive + negative:.10g} ({panels} panels)")
                return EnergyQuadResult(positive + negative, positive, negative, error, trace)
        previous = (positive, negative)
        panels *= 2
    raise QuadratureError(f"Averaged energy at m={m} did not converge to rtol={rtol} by {max_panels} panels",
                          trace=trace, context=ErrorContext("negstate", "averaged_energy", {'m': m, 'lambda': lam}))


def mc_crosscheck(m: float, lam: float, f: TestFunction, profile: RadialAngularProfile,
                  envelope: ExponentialEnvelope, samples: int = 1_000_000, seed: int = 0,
                  kernel: Optional[KernelC] = None, batch_size: int = MC_BATCH) -> Tuple[float, float]:
    """
    Plain Monte Carlo over the box [-1, 1]^6 in (u, u'), with the full vector integrand.

    Batches draw from child seeds of one root seed, so the estimate depends
    only on (samples, seed).

    Returns:
        Tuple[float, float]: (estimate, standard error).
    """
    if samples < MIN_MC_SAMPLES:
        raise ValidationError(f"Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {samples}")
    kernel = _resolve_kernel(profile, kernel)
    state = StatePacket(m, lam, envelope, kernel)
    if lam == 0:
        return 0.0, 0.0

    if batch_size < 1:
        raise ValidationError(f"batch size must be positive, got {batch_size}")
    lo, hi = RADIAL_SUPPORT
    batches = -(-samples // batch_size)
    total, total_sq = 0.0, 0.0
    for index, child in enumerate(np.random.SeedSequence(seed).spawn(batches)):
        size = min(batch_size, samples - index * batch_size)
        rng = np.random.default_rng(child)
        u = rng.uniform(-1.0, 1.0, (size, 3))
        u_p = rng.uniform(-1.0, 1.0, (size, 3))
        rho, rho_p = np.linalg.norm(u, axis=1), np.linalg.norm(u_p, axis=1)
        inside = (rho >= lo) & (rho <= hi) & (rho_p >= lo) & (rho_p <= hi)

        values = np.zeros(size)
        r, r_p = rho[inside], rho_p[inside]
        c = np.clip(np.einsum('ij,ij->i', u[inside], u_p[inside]) / (r * r_p), -1.0, 1.0)
        omega, omega_p, first, second = brackets(m, r, r_p, c)
        positive = lam ** 2 * state.phi ** 2 / m ** 3 * kernel.reduced(r, r_p, c) * first * f.transform(omega_p - omega)
        amplitude = state.phi / m ** 3 * profile.reduced(r, r_p, c)
        on_b = amplitude > 0
        negative = np.zeros_like(positive)
        negative[on_b] = (lam / _SQRT2 * amplitude[on_b] * second[on_b]
                          * f.transform(omega[on_b] + omega_p[on_b]))
        values[inside] = positive - negative
        total += float(values.sum())
        total_sq += float((values ** 2).sum())

    mean = total / samples
    variance = max(total_sq / samples - mean ** 2, 0.0) * samples / (samples - 1)
    scale = state.normalization_sq * m ** 6 * 64.0 / (2.0 * math.pi) ** 6
    estimate, stderr = scale * mean, scale * math.sqrt(variance / samples)
    logger.debug(f"Monte Carlo at m={m}: {estimate:.8g} +/- {stderr:.2g} ({samples} samples)")
    return estimate, stderr


@dataclass(frozen=True)
class KinematicReport:
    samples: int
    violations: Dict[str, int]
    extremes: Dict[str, float]

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())


def kinematic_sweep(m: float, samples: int = 500, seed: int = 0) -> KinematicReport:
    """
    Check the support inequalities at random support points.

    w, w' lie in [sqrt5 m/2, sqrt2 m]; the first bracket stays below
    8m/sqrt5; on supp b (cos >= 1/2) the second stays above 3m/(8 sqrt2).
    """
    if not m > 0 or samples < 1:
        raise ValidationError(f"kinematic sweep needs m > 0 and samples >= 1, got m={m}, samples={samples}")
    rng = np.random.default_rng(seed)
    rho = rng.uniform(*RADIAL_SUPPORT, samples)
    rho_p = rng.uniform(*RADIAL_SUPPORT, samples)
    c_any = rng.uniform(-1.0, 1.0, samples)
    c_b = rng.uniform(*ANGULAR_SUPPORT, samples)

    omega, omega_p, first, _ = brackets(m, rho, rho_p, c_any)
    _, _, _, second = brackets(m, rho, rho_p, c_b)
    tol = KINEMATIC_TOLERANCE * m
    frequencies = np.concatenate([omega, omega_p])
    violations = {
        'omega_range': int(np.count_nonzero((frequencies < _SQRT5 * m / 2 - tol) | (frequencies > _SQRT2 * m + tol))),
        'first_bracket': int(np.count_nonzero(first > 8.0 * m / _SQRT5 + tol)),
        'second_bracket': int(np.count_nonzero(second < 3.0 * m / (8.0 * _SQRT2) - tol)),
    }
    extremes = {
        'omega_min': float(frequencies.min() / m),
        'omega_max': float(frequencies.max() / m),
        'first_max': float(first.max() / m),
        'second_min': float(second.min() / m),
    }
    if any(violations.values()):
        logger.warning(f"Kinematic sweep at m={m} found violations: {violations}")
    return KinematicReport(samples, violations, extremes)


def theorem_bound(m: float, gamma: float, envelope: ExponentialEnvelope) -> float:
    """-Gamma m^4 phi(2 sqrt2 m)^2."""
    return -gamma * m ** 4 * envelope(2.0 * _SQRT2 * m) ** 2


def upper_bound_expression(lam, m: float, kernel: KernelC, envelope: ExponentialEnvelope):
    """-|N_{m, lambda}|^2 P(lambda) m^4 phi^2, the estimate the averaged energy never exceeds."""
    lam = np.asarray(lam, dtype=float)
    phi_sq = envelope(2.0 * _SQRT2 * m) ** 2
    n_sq = 1.0 / (1.0 + lam ** 2 * phi_sq * kernel.trace)
    return -n_sq * energy_quadratic(lam, kernel) * m ** 4 * phi_sq


@dataclass(frozen=True)
class TheoremRow:
    m: float
    lambda0: float
    gamma: float
    energy: float
    error: float
    bound: float
    margin: float
    normalization_sq: float
    chain_bound: float
    mc_estimate: float = math.nan
    mc_stderr: float = math.nan

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm': self.m,
            'lambda0': self.lambda0,
            'Gamma': self.gamma,
            'energy': self.energy,
            'error': self.error,
            'bound': self.bound,
            'margin': self.margin,
            'mc_estimate': self.mc_estimate,
            'mc_stderr': self.mc_stderr,
        }


@dataclass(frozen=True)
class TheoremReport:
    lambda0: float
    P_max: float
    gamma: float
    kernel: Dict[str, Any]
    rows: List[TheoremRow]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda0': self.lambda0,
            'P_max': self.P_max,
            'Gamma': self.gamma,
            'kernel': self.kernel,
            'rows': [row.to_dict() for row in self.rows],
        }


def verify_theorem(m_list: Sequence[float], f: TestFunction, profile: RadialAngularProfile,
                   envelope: ExponentialEnvelope, kernel: Optional[KernelC] = None,
                   mc_samples: int = 0, seed: int = 0, mc_batch: int = MC_BATCH) -> TheoremReport:
    """
    Check E(Psi_m) <= -Gamma m^4 phi(2 sqrt2 m)^2 at lambda0 for every mass.

    Args:
        m_list (Sequence[float]): Masses, each above envelope.m0.
        f (TestFunction): Averaging function.
        profile (RadialAngularProfile): Momentum profile.
        envelope (ExponentialEnvelope): Certified envelope of f.
        kernel (KernelC, optional): C kernel, derived when None.
        mc_samples (int): Monte Carlo samples per mass; 0 skips the cross-check.
        seed (int): Root seed of the Monte Carlo batches.
        mc_batch (int): Samples per Monte Carlo batch.

    Returns:
        TheoremReport: One row per mass with the margin |E| / |bound|.

    Raises:
        ValidationError: If a mass does not exceed m0.
        TheoremViolationError: If an inequality fails beyond the quadrature error.
    """
    kernel = _resolve_kernel(profile, kernel)
    lambda0, P_max = optimize_lambda(kernel)
    gamma = gamma_constant(kernel, lambda0, P_max)
    chain_bound = 1.0 / (1.0 + lambda0 ** 2 * kernel.trace)

    rows = []
    for m in m_list:
        state = StatePacket(float(m), lambda0, envelope, kernel)
        context = ErrorContext("negstate", "verify_theorem", {'m': m})
        if state.normalization_sq < chain_bound:
            raise TheoremViolationError(
                f"|N|^2={state.normalization_sq:.12g} below 1/(1 + lambda0^2 TrC)={chain_bound:.12g}", context)

        result = averaged_energy(m, lambda0, f, profile, envelope, kernel=kernel)
        bound = theorem_bound(m, gamma, envelope)
        if result.value > bound + result.error_estimate:
            raise TheoremViolationError(
                f"averaged energy {result.value:.10e} exceeds the bound {bound:.10e} at m={m} "
                f"(quadrature error {result.error_estimate:.2e})", context)

        mc_estimate, mc_stderr = math.nan, math.nan
        if mc_samples:
            mc_estimate, mc_stderr = mc_crosscheck(m, lambda0, f, profile, envelope, mc_samples, seed, kernel, mc_batch)
            if abs(mc_estimate - result.value) > 3.0 * mc_stderr + result.error_estimate:
                logger.warning(f"Monte Carlo {mc_estimate:.6e} +/- {mc_stderr:.1e} disagrees with "
                               f"quadrature {result.value:.6e} at m={m}")

        margin = abs(result.value) / abs(bound) if bound != 0 else math.inf
        logger.info(f"Theorem check at m={m}: energy={result.value:.6e}, bound={bound:.6e}, margin={margin:.4g}")
        rows.append(TheoremRow(float(m), lambda0, gamma, result.value, result.error_estimate, bound, margin,
                               state.normalization_sq, chain_bound, mc_estimate, mc_stderr))
    return TheoremReport(lambda0, P_max, gamma, kernel.to_dict(), rows)
