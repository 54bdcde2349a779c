"""Simulation configuration.

Defaults are the reference model parameters. Values are layered as
defaults <- config file (YAML or JSON) <- command-line overrides, and every
problem with the result is reported at once as a ``ConfigError``.
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from bankrisk.bank import annual_to_step_rate
from bankrisk.errors import ConfigError
from bankrisk.metrics import expected_alpha

logger = logging.getLogger(__name__)

_BOUNDED_PAIRS = (
    "theta1",
    "theta2",
    "sigma",
    "cash",
    "units",
    "deposit",
    "weight",
)


class SimConfig(BaseModel):
    """Every parameter of a run.

    ``a`` is drawn from U(a0, a0 + a_width); all other per-bank parameters
    from U(<name>_low, <name>_high).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_banks: int = 100
    horizon_steps: int = 36500
    dt_days: float = 1.0
    seed: int = 0

    a0: float = -1.05
    a_width: float = 2.1
    theta1_low: float = -1.0
    theta1_high: float = -0.3
    theta2_low: float = 0.3
    theta2_high: float = 1.0
    sigma_low: float = 3.0
    sigma_high: float = 4.0

    cash_low: float = 2000.0
    cash_high: float = 3000.0
    units_low: float = 2000.0
    units_high: float = 3000.0
    deposit_low: float = 100.0
    deposit_high: float = 200.0
    weight_low: float = 100.0
    weight_high: float = 500.0
    avg_links: float = 6.0
    network_path: str | None = None

    annual_deposit_rate: float = 0.01
    annual_interbank_rate: float = 0.05
    eta: float = 0.001
    gamma: float = 0.1
    initial_price: float = 1.0
    cear_c: float = 0.5

    n_sim: int = 20
    systemic_k: int = 1

    @model_validator(mode="after")
    def _check_ranges(self) -> SimConfig:
        problems = []
        if self.n_banks < 1:
            problems.append(f"n_banks must be at least 1, got {self.n_banks}")
        if self.horizon_steps < 0:
            problems.append(f"horizon_steps must be non-negative, got {self.horizon_steps}")
        if not self.dt_days > 0:
            problems.append(f"dt_days must be positive, got {self.dt_days}")
        if self.seed < 0:
            problems.append(f"seed must be non-negative, got {self.seed}")
        if not self.a_width > 0:
            problems.append(f"a_width must be positive, got {self.a_width}")
        for name in _BOUNDED_PAIRS:
            low, high = getattr(self, f"{name}_low"), getattr(self, f"{name}_high")
            if low > high:
                problems.append(f"{name}_low ({low}) must not exceed {name}_high ({high})")
        if not self.theta1_high < self.theta2_low:
            problems.append(
                f"theta1_high ({self.theta1_high}) must be below theta2_low ({self.theta2_low})"
            )
        if not self.sigma_low > 0:
            problems.append(f"sigma_low must be positive, got {self.sigma_low}")
        for name in ("cash_low", "units_low", "deposit_low", "weight_low"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be non-negative, got {getattr(self, name)}")
        if not 0 <= self.avg_links <= max(self.n_banks - 1, 0):
            problems.append(
                f"avg_links must lie in [0, n_banks-1], got {self.avg_links} for {self.n_banks} banks"
            )
        for name in ("annual_deposit_rate", "annual_interbank_rate"):
            if not getattr(self, name) > -1:
                problems.append(f"{name} must exceed -1, got {getattr(self, name)}")
        if not 0 < self.eta <= 1:
            problems.append(f"eta must lie in (0,1], got {self.eta}")
        if not self.gamma > 0:
            problems.append(f"gamma must be positive, got {self.gamma}")
        if not self.initial_price > 0:
            problems.append(f"initial_price must be positive, got {self.initial_price}")
        if not 0 < self.cear_c < 1:
            problems.append(f"cear_c must lie in (0,1), got {self.cear_c}")
        if self.n_sim < 1:
            problems.append(f"n_sim must be at least 1, got {self.n_sim}")
        if not 1 <= self.systemic_k <= max(self.n_banks, 1):
            problems.append(f"systemic_k must lie in [1, n_banks], got {self.systemic_k}")
        if problems:
            raise ValueError("\n".join(problems))
        return self

    @property
    def a_high(self) -> float:
        return self.a0 + self.a_width

    @property
    def rate_deposit(self) -> float:
        """Per-step deposit rate lambda_D."""
        return annual_to_step_rate(self.annual_deposit_rate, self.dt_days)

    @property
    def rate_interbank(self) -> float:
        """Per-step interbank rate lambda_I."""
        return annual_to_step_rate(self.annual_interbank_rate, self.dt_days)

    @property
    def expected_alpha(self) -> float:
        return expected_alpha(self.a0, self.a_width)


# =============================================================================
# Building and parsing
# =============================================================================


def _messages(error: ValidationError) -> list[str]:
    messages = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item["loc"])
        msg = item["msg"].removeprefix("Value error, ")
        if loc:
            messages.append(f"{loc}: {msg}")
        else:
            messages.extend(msg.splitlines())
    return messages


def build_config(**values: Any) -> SimConfig:
    """Create a SimConfig, turning validation failures into ``ConfigError``."""
    try:
        return SimConfig(**values)
    except ValidationError as e:
        raise ConfigError(_messages(e)) from e


def with_overrides(config: SimConfig, **changes: Any) -> SimConfig:
    """Copy of ``config`` with ``changes`` applied and re-validated."""
    return build_config(**{**config.model_dump(), **changes})


def parse_overrides(pairs: Iterable[str]) -> dict[str, Any]:
    """Parse ``key=value`` strings; values are read as YAML scalars.

    Raises:
        ConfigError: If an entry has no '=' or an unreadable value.
    """
    overrides: dict[str, Any] = {}
    problems = []
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        key = key.strip()
        if not sep or not key:
            problems.append(f"override must look like key=value, got {pair!r}")
            continue
        try:
            overrides[key] = yaml.safe_load(raw) if raw.strip() else None
        except yaml.YAMLError as e:
            problems.append(f"{key}: unreadable value {raw!r} ({e})")
    if problems:
        raise ConfigError(problems)
    return overrides


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a YAML (.yaml/.yml) or JSON (.json) mapping of config values.

    Raises:
        ConfigError: If the file is missing, malformed or not a mapping.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"malformed config file {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigError(f"config file {path} must hold a mapping, got {type(data).__name__}")
    return dict(data)


def parse_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> SimConfig:
    """Defaults, then the file at ``path``, then ``overrides``.

    Args:
        path: Optional YAML or JSON config file.
        overrides: Values that win over the file (command-line flags).

    Returns:
        The validated config.

    Raises:
        ConfigError: With one message per problem.
    """
    values: dict[str, Any] = {}
    if path is not None:
        values.update(load_config_file(path))
    if overrides:
        values.update(overrides)
    config = build_config(**values)
    logger.debug(f"Parsed config {config_hash(config)} from {path or 'defaults'}")
    return config


def config_hash(config: SimConfig) -> str:
    """Short SHA-256 of every field except the seed."""
    canonical = json.dumps(
        config.model_dump(exclude={"seed"}, mode="json"),
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
