import os
import json
import math
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Union

from dotenv import load_dotenv

from src.utils.errors import ConfigError, ValidationError, ErrorContext

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

SEED_LIMIT = 2 ** 64
DEFAULT_M1 = 1.0


class Analysis(Enum):
    """Analyses the runner knows how to perform."""
    TOWER_REPORT = "tower-report"
    QEI_REPORT = "qei-report"
    NEGSTATE_VERIFY = "negstate-verify"
    TESTFN_BUILD = "testfn-build"
    DISTAL_DEMO = "distal-demo"


def _env_seed() -> int:
    raw = os.getenv("QEILAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"QEILAB_SEED must be an integer, got {raw!r}")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _check_positive(errors: List[str], section: str, name: str, value: Any, allow_zero: bool = False) -> None:
    if not _is_number(value):
        errors.append(f"{section}.{name} must be a finite number, got {value!r}")
    elif value < 0 or (value == 0 and not allow_zero):
        errors.append(f"{section}.{name} must be {'nonnegative' if allow_zero else 'positive'}, got {value}")


def _check_grid(errors: List[str], name: str, values: Optional[Sequence[Any]], allow_zero: bool = False) -> None:
    if values is None:
        return
    if not isinstance(values, list) or not values:
        errors.append(f"grids.{name} must be a nonempty list, got {values!r}")
        return
    for value in values:
        _check_positive(errors, "grids", name, value, allow_zero)


class BaseConfig(ABC):
    """Abstract base configuration class."""
    section: ClassVar[str] = ""
    aliases: ClassVar[Dict[str, str]] = {}

    @abstractmethod
    def problems(self) -> List[str]:
        """All invariant violations of this section."""

    def validate(self) -> None:
        """Validate the configuration."""
        errors = self.problems()
        if errors:
            raise ConfigError(f"{self.section} configuration is invalid", errors)

    @classmethod
    def from_dict(cls, data: Any, errors: List[str]) -> Optional['BaseConfig']:
        """Strictly map a JSON object onto the section; unknown keys are reported."""
        if not isinstance(data, dict):
            errors.append(f"{cls.section} must be a JSON object")
            return None
        names = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = cls.aliases.get(key, key)
            if name not in names or key in cls.aliases.values():
                errors.append(f"{cls.section}: unknown key '{key}'")
                continue
            kwargs[name] = value
        return cls(**kwargs)

    def to_dict(self) -> Dict[str, Any]:
        inverse = {v: k for k, v in self.aliases.items()}
        return {inverse.get(f.name, f.name): getattr(self, f.name) for f in fields(self)}


@dataclass
class TowerConfig(BaseConfig):
    """Mass tower: type is finite, arithmetic, logarithmic or custom."""
    section: ClassVar[str] = "tower"

    type: str = "arithmetic"
    m1: Optional[float] = None
    d0: Optional[float] = None
    masses: Optional[List[float]] = None
    tail_bound: Optional[Dict[str, float]] = None

    def build(self):
        from src.tower.spectrum import build_tower
        m1 = self.m1
        if m1 is None and self.type == "arithmetic":
            m1 = DEFAULT_M1
        return build_tower(self.type, m1=m1, d0=self.d0, masses=self.masses, tail_bound=self.tail_bound)

    def problems(self) -> List[str]:
        try:
            self.build()
        except (ValidationError, TypeError, ValueError) as e:
            return [f"tower: {e}"]
        return []


@dataclass
class TestFunctionConfig(BaseConfig):
    """Averaging function f built from the bump of radius a."""
    section: ClassVar[str] = "test_function"
    __test__ = False

    a: float = 1.0
    beta0: float = 1.0
    shape: str = "bump"
    # {"u": [...], "values": [...]}: transform samples for the decay classification
    decay_samples: Optional[Dict[str, List[float]]] = None

    def build(self):
        from src.testfn.mollifier import make_mollifier, self_convolve
        from src.testfn.averaging import build_test_function
        return build_test_function(self_convolve(make_mollifier(self.a, self.shape)), beta0=self.beta0)

    def problems(self) -> List[str]:
        from src.testfn.mollifier import MollifierShape
        errors: List[str] = []
        _check_positive(errors, self.section, "a", self.a)
        _check_positive(errors, self.section, "beta0", self.beta0)
        if self.shape not in {s.value for s in MollifierShape}:
            errors.append(f"test_function.shape must be one of {[s.value for s in MollifierShape]}, got {self.shape!r}")
        if self.decay_samples is not None:
            errors.extend(self._sample_problems(self.decay_samples))
        return errors

    @staticmethod
    def _sample_problems(samples: Any) -> List[str]:
        prefix = "test_function.decay_samples"
        if not isinstance(samples, dict) or set(samples) != {"u", "values"}:
            return [f"{prefix} must be an object with keys \"u\" and \"values\""]
        u, values = samples["u"], samples["values"]
        if not (isinstance(u, list) and isinstance(values, list)) or len(u) != len(values) or len(u) < 4:
            return [f"{prefix}.u and .values must be lists of equal length >= 4"]
        if not all(_is_number(x) and x > 0 for x in u + values):
            return [f"{prefix} entries must be positive finite numbers"]
        return []


ShapeSpec = Union[str, List[float]]


@dataclass
class ProfileConfig(BaseConfig):
    """Momentum profile of the negative-energy state and the envelope cutoff m0."""
    section: ClassVar[str] = "profile"

    m0: float = 0.5
    radial_shape: ShapeSpec = "bump"
    angular_shape: ShapeSpec = "bump"

    @staticmethod
    def _spec(shape: ShapeSpec):
        from src.negstate.profile import BumpSpec
        return None if shape == "bump" else BumpSpec(float(shape[0]), float(shape[1]))

    def build(self):
        from src.negstate.profile import build_profile
        return build_profile(self._spec(self.radial_shape), self._spec(self.angular_shape))

    def problems(self) -> List[str]:
        from src.negstate.profile import RADIAL_SUPPORT, ANGULAR_SUPPORT
        errors: List[str] = []
        _check_positive(errors, self.section, "m0", self.m0, allow_zero=True)
        for name, shape, support in (("radial_shape", self.radial_shape, RADIAL_SUPPORT),
                                     ("angular_shape", self.angular_shape, ANGULAR_SUPPORT)):
            if shape == "bump":
                continue
            if not (isinstance(shape, list) and len(shape) == 2 and all(_is_number(v) for v in shape)):
                errors.append(f"profile.{name} must be \"bump\" or [lower, upper], got {shape!r}")
            elif not support[0] <= shape[0] < shape[1] <= support[1]:
                errors.append(f"profile.{name} interval {shape} leaves the support {list(support)}")
        return errors


@dataclass
class ConstantsConfig(BaseConfig):
    """Free constants of the bounds; the source results only assert their existence."""
    section: ClassVar[str] = "constants"

    C: float = 1.0
    c: float = 1.0
    C_lower: float = 1.0
    A: float = 1.0
    d: int = 4
    R: Optional[float] = None

    def problems(self) -> List[str]:
        errors: List[str] = []
        for name in ("C", "c", "C_lower", "A"):
            _check_positive(errors, self.section, name, getattr(self, name))
        if not (isinstance(self.d, int) and not isinstance(self.d, bool) and self.d >= 2):
            errors.append(f"constants.d must be an integer >= 2, got {self.d!r}")
        if self.R is not None:
            _check_positive(errors, self.section, "R", self.R)
        return errors


@dataclass
class GridConfig(BaseConfig):
    """Sweep grids; None selects the analysis default."""
    section: ClassVar[str] = "grids"
    aliases: ClassVar[Dict[str, str]] = {'lambda': 'lam'}

    beta: Optional[List[float]] = None
    lam: Optional[List[float]] = None
    m: Optional[List[float]] = None
    u: Optional[List[float]] = None

    def problems(self) -> List[str]:
        errors: List[str] = []
        _check_grid(errors, "beta", self.beta)
        _check_grid(errors, "lambda", self.lam)
        _check_grid(errors, "m", self.m)
        _check_grid(errors, "u", self.u, allow_zero=True)
        if not errors and self.lam is not None and any(b >= a for a, b in zip(self.lam, self.lam[1:])):
            errors.append("grids.lambda must be strictly decreasing")
        return errors


@dataclass
class OutputConfig(BaseConfig):
    """Configuration class for output settings."""
    section: ClassVar[str] = "output"

    output_dir: str = field(default_factory=lambda: os.getenv("QEILAB_OUTPUT_DIR", "output"))
    plots: bool = False

    def problems(self) -> List[str]:
        errors: List[str] = []
        if not isinstance(self.output_dir, str) or not self.output_dir:
            errors.append("output.output_dir must be specified")
        if not isinstance(self.plots, bool):
            errors.append(f"output.plots must be true or false, got {self.plots!r}")
        return errors


@dataclass
class LogConfig(BaseConfig):
    section: ClassVar[str] = "log"

    level: str = field(default_factory=lambda: os.getenv("QEILAB_LOG_LEVEL", "INFO"))
    log_dir: Optional[str] = field(default_factory=lambda: os.getenv("QEILAB_LOG_DIR") or None)

    def problems(self) -> List[str]:
        from src.utils.logger import LabLogger
        if not isinstance(self.level, str) or self.level.upper() not in LabLogger.LOG_LEVELS:
            return [f"log.level must be one of {sorted(LabLogger.LOG_LEVELS)}, got {self.level!r}"]
        return []


@dataclass
class MonteCarloConfig(BaseConfig):
    """Monte Carlo cross-check; samples = 0 skips it."""
    section: ClassVar[str] = "monte_carlo"

    samples: int = 0
    batch_size: int = 1 << 16

    def problems(self) -> List[str]:
        from src.negstate.energy import MIN_MC_SAMPLES
        errors: List[str] = []
        for name in ("samples", "batch_size"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                errors.append(f"monte_carlo.{name} must be an integer, got {value!r}")
        if not errors:
            if self.samples != 0 and self.samples < MIN_MC_SAMPLES:
                errors.append(f"monte_carlo.samples must be 0 or at least {MIN_MC_SAMPLES}, got {self.samples}")
            if self.batch_size < 1:
                errors.append(f"monte_carlo.batch_size must be positive, got {self.batch_size}")
        return errors


_SECTIONS = {
    'tower': TowerConfig,
    'test_function': TestFunctionConfig,
    'profile': ProfileConfig,
    'constants': ConstantsConfig,
    'grids': GridConfig,
    'output': OutputConfig,
    'log': LogConfig,
    'monte_carlo': MonteCarloConfig,
}


@dataclass
class RunConfig:
    """A complete, validated run description."""
    analysis: Analysis
    seed: int = field(default_factory=_env_seed)
    tower: TowerConfig = field(default_factory=TowerConfig)
    test_function: TestFunctionConfig = field(default_factory=TestFunctionConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    constants: ConstantsConfig = field(default_factory=ConstantsConfig)
    grids: GridConfig = field(default_factory=GridConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    log: LogConfig = field(default_factory=LogConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)

    def problems(self) -> List[str]:
        errors: List[str] = []
        if not (isinstance(self.seed, int) and not isinstance(self.seed, bool) and 0 <= self.seed < SEED_LIMIT):
            errors.append(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        for name in _SECTIONS:
            errors.extend(getattr(self, name).problems())
        return errors

    def validate(self) -> None:
        errors = self.problems()
        if errors:
            raise ConfigError(f"{len(errors)} configuration problem(s)", errors,
                              ErrorContext("config", "validate", {'analysis': self.analysis.value}))

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {'analysis': self.analysis.value, 'seed': self.seed}
        for name in _SECTIONS:
            record[name] = getattr(self, name).to_dict()
        return record


def _reject_constant(token: str):
    raise ValueError(f"non-finite number {token} is not valid JSON")


def parse_config(path: Union[str, Path]) -> RunConfig:
    """
    Read a strict JSON run configuration.

    Unknown keys are rejected at every level and all problems are collected
    before a single ConfigError is raised.

    Args:
        path: JSON file.

    Returns:
        RunConfig: The validated configuration with defaults filled.

    Raises:
        ConfigError: With every problem in ``errors``.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"), parse_constant=_reject_constant)
    except OSError as e:
        raise ConfigError(f"cannot read configuration {path}: {e}") from e
    except ValueError as e:
        raise ConfigError(f"configuration {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")

    errors: List[str] = []
    analysis = None
    if 'analysis' not in data:
        errors.append("analysis is required")
    else:
        try:
            analysis = Analysis(data['analysis'])
        except ValueError:
            errors.append(f"unknown analysis {data['analysis']!r}; expected one of {[a.value for a in Analysis]}")

    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        if key == 'analysis':
            continue
        if key == 'seed':
            kwargs['seed'] = value
        elif key in _SECTIONS:
            section = _SECTIONS[key].from_dict(value, errors)
            if section is not None:
                kwargs[key] = section
        else:
            errors.append(f"unknown key '{key}'")

    config = RunConfig(analysis or Analysis.TOWER_REPORT, **kwargs)
    errors.extend(config.problems())
    if errors or analysis is None:
        raise ConfigError(f"{len(errors)} configuration problem(s) in {path}", errors,
                          ErrorContext("config", "parse_config", {'path': str(path)}))
    logger.info(f"Loaded {analysis.value} configuration from {path} (seed={config.seed})")
    return config


class ConfigFactory:
    """Factory class for creating configurations."""

    @classmethod
    def for_analysis(cls, analysis: Union[str, Analysis], **sections: BaseConfig) -> RunConfig:
        """Validated default configuration of an analysis."""
        try:
            analysis = Analysis(analysis)
        except ValueError:
            raise ConfigError(f"Unsupported analysis: {analysis}")
        config = RunConfig(analysis, **sections)
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> RunConfig:
        return parse_config(path)
