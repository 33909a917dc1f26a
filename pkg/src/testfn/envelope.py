"""Certified exponential lower envelopes of averaging-function transforms."""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Optional, Union

import numpy as np
from scipy.optimize import curve_fit

from src.quadrature import integrate_panels
from src.testfn.averaging import TestFunction
from src.utils.errors import ValidationError, NumericError, TheoremViolationError, ErrorContext

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

TAIL_FRACTION = 1e-12
ENVELOPE_SLACK = -1e-10
DEFAULT_GRID_SPACING = 0.01   # in units of 1 / beta0
DEFAULT_GRID_EXTENT = 50.0    # in units of 1 / beta0


@dataclass(frozen=True)
class ExponentialEnvelope:
    """
    phi(u) = kappa e^{-beta0 u} on [m0, inf), a lower bound for f_hat.

    ``truncation`` and ``remainder`` record how kappa was certified: the
    frequency cut U and the bound on the discarded tail.
    """
    kappa: float
    beta0: float
    m0: float = 0.0
    truncation: float = float('nan')
    remainder: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.kappa <= 1.0:
            raise ValidationError(f"Envelope kappa must lie in (0, 1], got {self.kappa}",
                                  ErrorContext("testfn", "ExponentialEnvelope", {'kappa': self.kappa}))
        if not self.beta0 > 0:
            raise ValidationError(f"Envelope beta0 must be positive, got {self.beta0}")
        if not self.m0 >= 0:
            raise ValidationError(f"Envelope cutoff m0 must be nonnegative, got {self.m0}")

    def __call__(self, u: ArrayLike) -> Union[float, np.ndarray]:
        values = self.kappa * np.exp(-self.beta0 * np.abs(np.asarray(u, dtype=float)))
        return float(values) if np.ndim(values) == 0 else values

    def rescale(self, lam: float) -> 'ExponentialEnvelope':
        """Envelope of f_lambda: kappa e^{-lambda beta0 u} above m0 / lambda."""
        if not lam > 0:
            raise ValidationError(f"Rescaling factor must be positive, got {lam}")
        return replace(self, beta0=lam * self.beta0, m0=self.m0 / lam)

    def with_cutoff(self, m0: float) -> 'ExponentialEnvelope':
        return replace(self, m0=m0)


def verify_envelope(f: TestFunction, envelope: ExponentialEnvelope,
                    u_max: Optional[float] = None, spacing: Optional[float] = None) -> float:
    """
    Sweep f_hat(u) - phi(u) over [0, u_max] and return the smallest slack.

    Raises:
        TheoremViolationError: If the slack drops below -1e-10 anywhere.
    """
    u_max = DEFAULT_GRID_EXTENT / envelope.beta0 if u_max is None else u_max
    spacing = DEFAULT_GRID_SPACING / envelope.beta0 if spacing is None else spacing
    grid = np.arange(0.0, u_max + 0.5 * spacing, spacing)

    slack = f.transform(grid) - envelope(grid)
    worst = int(np.argmin(slack))
    logger.debug(f"Envelope sweep over {grid.size} points: min slack {slack[worst]:.3e} at u={grid[worst]:.4g}")
    if slack[worst] < ENVELOPE_SLACK:
        raise TheoremViolationError(
            f"Transform falls below the envelope at u={grid[worst]:.6g} (slack {slack[worst]:.3e})",
            ErrorContext("testfn", "kappa_envelope", {'kappa': envelope.kappa, 'beta0': envelope.beta0}),
        )
    return float(slack[worst])


def kappa_envelope(f: TestFunction, m0: float = 0.0, verify: bool = True,
                   u_max: Optional[float] = None) -> ExponentialEnvelope:
    """
    Certify kappa = (1/2pi) int_{-inf}^0 eta_hat(u) e^{beta0 u} du / Z.

    The integral is truncated at -U with U large enough that the bound
    |eta_hat| <= int eta makes the discarded tail smaller than 1e-12 of the
    partial value; the quadrature error is subtracted so the returned kappa
    never exceeds the exact one.

    Args:
        f (TestFunction): Function built by build_test_function (or rescaled).
        m0 (float): Lower cutoff of the envelope.
        verify (bool): Sweep the verification grid after construction.
        u_max (float, optional): Verification extent, default 50 / beta0.

    Returns:
        ExponentialEnvelope: The certified envelope.
    """
    chi = f.eta.chi
    lam, beta0 = f.scale, f.beta0
    eta_l1 = lam * f.eta.integral()

    def integrand(u: np.ndarray) -> np.ndarray:
        return lam * chi.transform(lam * u) ** 2 * np.exp(beta0 * u)

    cut = 10.0 / beta0
    for _ in range(6):
        result = integrate_panels(integrand, -cut, 0.0, n_panels=8, rtol=1e-13)
        tail = eta_l1 * np.exp(-beta0 * cut) / beta0
        if tail <= TAIL_FRACTION * result.value:
            break
        cut = 1.05 * np.log(eta_l1 / (beta0 * TAIL_FRACTION * result.value)) / beta0
    else:
        raise NumericError(f"Could not certify the kappa truncation (tail {tail:.3e})")

    kappa = (result.value - result.error) / (2.0 * np.pi * f.normalization)
    logger.info(f"Certified kappa={kappa:.15g} (U={cut:.4g}, tail<={tail:.2e}, quad err {result.error:.2e})")

    envelope = ExponentialEnvelope(kappa=min(kappa, 1.0), beta0=beta0, m0=m0, truncation=cut,
                                   remainder=(tail + result.error) / (2.0 * np.pi * f.normalization))
    if verify:
        verify_envelope(f, envelope, u_max=u_max)
    return envelope


def transform_table(f: TestFunction, envelope: ExponentialEnvelope,
                    u: Optional[np.ndarray] = None) -> Dict[str, np.ndarray]:
    """Columns (u, f_hat, envelope) for CSV export."""
    if u is None:
        u = np.linspace(0.0, 20.0 / envelope.beta0, 401)
    return {'u': u, 'f_hat': f.transform(u), 'envelope': envelope(u)}


class DecayClass(Enum):
    EXPONENTIAL = "exponential"
    STRETCHED = "stretched"
    FASTER = "faster"


@dataclass(frozen=True)
class DecayFit:
    """Fit of g_hat(u) ~ kappa e^{-gamma |u|^alpha}."""
    kappa: float
    gamma: float
    alpha: float
    decay_class: DecayClass


def classify_decay(u: ArrayLike, values: ArrayLike, alpha_tolerance: float = 0.05) -> DecayFit:
    """
    Classify user-supplied transform samples by their decay exponent.

    Args:
        u (ArrayLike): Positive frequencies.
        values (ArrayLike): Transform samples at u.
        alpha_tolerance (float): Half-width of the band around alpha = 1
            classified as exponential.

    Returns:
        DecayFit: Fitted (kappa, gamma, alpha) and the decay class.

    Raises:
        ValidationError: With fewer than four positive samples.
    """
    u = np.asarray(u, dtype=float)
    values = np.asarray(values, dtype=float)
    if u.shape != values.shape:
        raise ValidationError("Frequency and value samples differ in shape")
    keep = (u > 0) & (values > 0) & np.isfinite(values)
    if np.count_nonzero(keep) < 4:
        raise ValidationError("Decay classification needs at least four positive samples",
                              ErrorContext("testfn", "classify_decay", {'samples': int(np.count_nonzero(keep))}))

    def model(x, log_kappa, gamma, alpha):
        return log_kappa - gamma * x ** alpha

    try:
        (log_kappa, gamma, alpha), _ = curve_fit(
            model, u[keep], np.log(values[keep]), p0=(0.0, 1.0, 1.0),
            bounds=([-np.inf, 0.0, 0.01], [np.inf, np.inf, 10.0]), maxfev=20000,
        )
    except RuntimeError as e:
        logger.error(f"Decay fit failed: {e}")
        raise NumericError(f"Decay fit failed: {e}") from e

    if abs(alpha - 1.0) <= alpha_tolerance:
        decay_class = DecayClass.EXPONENTIAL
    elif alpha < 1.0:
        decay_class = DecayClass.STRETCHED
    else:
        decay_class = DecayClass.FASTER
    logger.debug(f"Decay fit: kappa={np.exp(log_kappa):.4g}, gamma={gamma:.4g}, alpha={alpha:.4g} -> {decay_class.value}")
    return DecayFit(kappa=float(np.exp(log_kappa)), gamma=float(gamma), alpha=float(alpha), decay_class=decay_class)
