"""Exception hierarchy for bankrisk."""

from typing import Any


class BankRiskError(Exception):
    """Base class for every error raised by bankrisk."""


class ConfigError(BankRiskError):
    """Invalid configuration.

    Carries one message per offending field so callers can report all of
    them at once.
    """

    def __init__(self, errors: list[str] | str):
        self.errors = [errors] if isinstance(errors, str) else list(errors)
        super().__init__("; ".join(self.errors))


class RateDomainError(ConfigError, ValueError):
    """Annual rate outside the domain of the compounding formula."""


class SimulationError(BankRiskError):
    """A run could not continue."""


class InvariantViolation(SimulationError):
    """A model invariant was broken during a step.

    Attributes:
        step: Step index at which the violation was detected, if known.
        dump: Snapshot of the offending values.
    """

    def __init__(self, message: str, step: int | None = None, dump: dict[str, Any] | None = None):
        self.step = step
        self.dump = dump or {}
        prefix = f"step {step}: " if step is not None else ""
        super().__init__(f"{prefix}{message}")


class LedgerError(InvariantViolation):
    """Settlement would leave negative cash or negative holdings."""


class DefaultStateError(InvariantViolation):
    """A defaulted bank was asked to default again."""


class EnsembleError(SimulationError):
    """One run of a Monte Carlo ensemble failed."""

    def __init__(self, seed: int, cause: BaseException):
        self.seed = seed
        super().__init__(f"run with seed {seed} failed: {cause}")


class OutputError(BankRiskError):
    """Writing an output file failed."""

    def __init__(self, path: str, cause: BaseException):
        self.path = path
        super().__init__(f"could not write {path}: {cause}")
