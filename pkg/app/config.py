import json
import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from app.errors import ConfigError

logger = logging.getLogger(__name__)


class Config:
    """Canonical defaults for simulations and sweeps.

    Everything is configured through command-line flags or a JSON file;
    environment variables are not read.
    """

    ARTIFACT_VERSION = "0.1.0"

    # Model constants (units of Omega)
    OMEGA = 1.0
    KAPPA = 1.0
    OMEGA3 = 1e3
    TAU = 30.0
    GAMMA = 1.0
    THETA = 0.0
    MODEL = "microscopic"

    # Default sweep: Gamma over six decades
    SWEEP_AXIS = "gamma"
    SWEEP_MIN = 1e-3
    SWEEP_MAX = 1e3
    SWEEP_POINTS = 61
    SWEEP_SPACING = "log"

    # Default grids for the other axes
    TAU_RANGE = (10.0, 60.0)
    KAPPA_RANGE = (1.0, 4.0)

    # Default temperature grid when sweeping theta. The top end puts the
    # thermal dephasing Gamma Theta / omega3 at ZENO_DEPHASING, which is deep
    # in the frozen regime for any Gamma; THETA_MAX is its value at the defaults.
    THETA_MIN = 1e-1
    ZENO_DEPHASING = 3e3
    THETA_MAX = 3e6

    # Integrator
    REL_TOL = 1e-8
    ABS_TOL = 1e-10
    METHOD = "RK45"
    SAMPLES = 600

    JOBS = 1

    MODELS = ("microscopic", "phenomenological", "closed")
    AXES = ("gamma", "theta", "tau", "kappa")
    SPACINGS = ("linear", "log")
    METHODS = ("RK45", "DOP853", "RK4")

    @classmethod
    def validate(cls):
        """Validate the built-in defaults themselves."""
        return SweepConfig().validate()

    @classmethod
    def axis_range(
        cls, axis: str, gamma: float = GAMMA, omega3: float = OMEGA3
    ) -> Tuple[float, float]:
        """Default (min, max) of a swept axis."""
        if axis == "theta":
            if not gamma > 0:
                return cls.THETA_MIN, cls.THETA_MAX
            return cls.THETA_MIN, cls.ZENO_DEPHASING * omega3 / gamma
        if axis == "tau":
            return cls.TAU_RANGE
        if axis == "kappa":
            return cls.KAPPA_RANGE
        return cls.SWEEP_MIN, cls.SWEEP_MAX


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: model, fixed parameters, swept axis and integrator settings."""

    model: str = Config.MODEL
    omega: float = Config.OMEGA
    kappa: float = Config.KAPPA
    omega3: float = Config.OMEGA3
    tau: float = Config.TAU
    gamma: float = Config.GAMMA
    theta: float = Config.THETA
    sweep: str = Config.SWEEP_AXIS
    sweep_min: float = Config.SWEEP_MIN
    sweep_max: float = Config.SWEEP_MAX
    points: int = Config.SWEEP_POINTS
    spacing: str = Config.SWEEP_SPACING
    rel_tol: float = Config.REL_TOL
    abs_tol: float = Config.ABS_TOL
    max_step: Optional[float] = None
    method: str = Config.METHOD
    samples: int = Config.SAMPLES
    secular: bool = False
    jobs: int = Config.JOBS
    output: Optional[str] = None

    def validate(self) -> bool:
        """
        Check every invariant and report all violations at once.

        Raises:
            ConfigError: naming each offending field
        """
        problems: List[str] = []
        bad: List[str] = []

        def fail(field_name: str, reason: str):
            bad.append(field_name)
            problems.append(f"{field_name} ({reason})")

        if self.model not in Config.MODELS:
            fail("model", f"one of {', '.join(Config.MODELS)}")
        if self.sweep not in Config.AXES:
            fail("sweep", f"one of {', '.join(Config.AXES)}")
        if self.spacing not in Config.SPACINGS:
            fail("spacing", "linear or log")
        if self.method not in Config.METHODS:
            fail("method", f"one of {', '.join(Config.METHODS)}")

        for name in ("omega", "kappa", "omega3", "tau"):
            if not _finite_positive(getattr(self, name)):
                fail(name, "must be positive")
        for name in ("gamma", "theta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                fail(name, "must be non-negative")

        if self.points < 2:
            fail("points", "need at least 2")
        if not self.sweep_min < self.sweep_max:
            fail("min", "must be below max")
        if self.spacing == "log" and not self.sweep_min > 0:
            fail("min", "log spacing needs min > 0")
        elif self.sweep in ("tau", "kappa") and not self.sweep_min > 0:
            fail("min", f"{self.sweep} must stay positive")
        elif self.sweep_min < 0:
            fail("min", f"{self.sweep} must stay non-negative")

        if self.model == "closed" and self.sweep in ("gamma", "theta"):
            fail("sweep", f"the closed model has no {self.sweep}")
        if self.model == "phenomenological":
            if self.sweep == "theta":
                fail("sweep", "the phenomenological model has no temperature")
            if self.theta > 0:
                fail("theta", "the phenomenological model is at zero temperature")

        for name in ("rel_tol", "abs_tol"):
            if not _finite_positive(getattr(self, name)):
                fail(name.replace("_", "-"), "must be positive")
        if self.max_step is not None and not _finite_positive(self.max_step):
            fail("max-step", "must be positive")
        if self.samples < 2:
            fail("samples", "need at least 2")
        if self.jobs < 1:
            fail("jobs", "need at least 1")

        if problems:
            raise ConfigError(f"Invalid configuration: {', '.join(problems)}", fields=bad)
        return True

    def axis_values(self) -> np.ndarray:
        """The swept grid, strictly increasing."""
        if self.spacing == "log":
            return np.geomspace(self.sweep_min, self.sweep_max, self.points)
        return np.linspace(self.sweep_min, self.sweep_max, self.points)

    def echo(self) -> Dict[str, Any]:
        """Flat dictionary of every setting, for the CSV metadata block."""
        return asdict(self)


# File keys that differ from the dataclass field names
_KEY_ALIASES = {
    "min": "sweep_min",
    "max": "sweep_max",
}

_FIELD_NAMES = {f.name for f in fields(SweepConfig)}


def _finite_positive(value: float) -> bool:
    return math.isfinite(value) and value > 0


def normalize_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_")
    return _KEY_ALIASES.get(key, key)


def _normalize(values: Mapping[str, Any], source: str) -> Dict[str, Any]:
    normalized: Dict[str, Any] = {}
    unknown = []
    for key, value in values.items():
        name = normalize_key(key)
        if name == "log":
            name, value = "spacing", "log" if value else "linear"
        if name not in _FIELD_NAMES:
            unknown.append(key)
            continue
        normalized[name] = value
    if unknown:
        raise ConfigError(f"Unknown {source} keys: {', '.join(unknown)}", fields=unknown)
    return normalized


def _coerce(values: Dict[str, Any]) -> Dict[str, Any]:
    """Convert file values to the dataclass field types, naming the field on failure."""
    template = SweepConfig()
    coerced: Dict[str, Any] = {}
    bad = []
    for name, value in values.items():
        default = getattr(template, name)
        try:
            if value is None:
                coerced[name] = None
            elif isinstance(default, bool):
                if not isinstance(value, bool):
                    raise TypeError(name)
                coerced[name] = value
            elif isinstance(default, int):
                if isinstance(value, bool) or float(value) != int(value):
                    raise TypeError(name)
                coerced[name] = int(value)
            elif isinstance(default, float) or name == "max_step":
                if isinstance(value, bool):
                    raise TypeError(name)
                coerced[name] = float(value)
            else:
                coerced[name] = str(value)
        except (TypeError, ValueError):
            bad.append(name)
    if bad:
        raise ConfigError(f"Malformed values for: {', '.join(bad)}", fields=bad)
    return coerced


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a flat JSON key/value document.

    Args:
        path: file path

    Returns:
        Normalized and type-checked overrides

    Raises:
        ConfigError: if the file is unreadable, not a flat JSON object, or
            holds unknown keys or malformed values
    """
    try:
        with open(path, encoding="utf-8") as handle:
            document = json.load(handle)
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}", fields=["config"]) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed config file {path}: {e}", fields=["config"]) from e

    if not isinstance(document, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object", fields=["config"])
    nested = [key for key, value in document.items() if isinstance(value, (dict, list))]
    if nested:
        raise ConfigError(f"Config file values must be scalars: {', '.join(nested)}", fields=nested)

    logger.info(f"Loaded {len(document)} settings from {path}")
    return _coerce(_normalize(document, "config file"))


def collect_overrides(
    flags: Optional[Mapping[str, Any]] = None, config_path: Optional[str] = None
) -> Dict[str, Any]:
    """
    Settings given explicitly, by the JSON file or by flags.

    Flags override the file. Flags whose value is None are treated as not given.

    Raises:
        ConfigError: on unknown keys or malformed values
    """
    overrides: Dict[str, Any] = {}
    if config_path:
        overrides.update(load_config_file(config_path))
    if flags:
        given = {key: value for key, value in flags.items() if value is not None}
        overrides.update(_coerce(_normalize(given, "flag")))
    return overrides


def build_config(overrides: Mapping[str, Any]) -> SweepConfig:
    """
    Apply explicit settings over the defaults and validate the result.

    A sweep bound that is not given comes from the default range of the
    swept axis.
    """
    settings = dict(overrides)
    low, high = Config.axis_range(
        settings.get("sweep", Config.SWEEP_AXIS),
        gamma=settings.get("gamma", Config.GAMMA),
        omega3=settings.get("omega3", Config.OMEGA3),
    )
    settings.setdefault("sweep_min", low)
    settings.setdefault("sweep_max", high)

    config = replace(SweepConfig(), **settings)
    config.validate()
    return config


def parse_config(
    flags: Optional[Mapping[str, Any]] = None, config_path: Optional[str] = None
) -> SweepConfig:
    """
    Combine defaults, an optional JSON file and explicit flags.

    Flags override the file, which overrides the defaults.

    Raises:
        ConfigError: on unknown keys, malformed values or violated invariants
    """
    return build_config(collect_overrides(flags, config_path))
