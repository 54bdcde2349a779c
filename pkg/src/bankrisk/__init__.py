"""bankrisk - Agent-based simulation of systemic risk in an interbank market."""

__version__ = "1.0.0"

from bankrisk.config import SimConfig, parse_config  # noqa: E402
from bankrisk.engine import SimState, init_simulation, run, step  # noqa: E402
from bankrisk.ensemble import monte_carlo, sweep  # noqa: E402
from bankrisk.output import write_outputs  # noqa: E402

__all__ = [
    "SimConfig",
    "SimState",
    "init_simulation",
    "monte_carlo",
    "parse_config",
    "run",
    "step",
    "sweep",
    "write_outputs",
]
