"""Multi-objective PPO toolkit: adaptive smooth Tchebycheff scalarization,
conflict-driven smoothness control, branched critics, per-objective gradient
surgery, simulated environments, and Pareto-front evaluation metrics."""

from pastarl.errors import ConfigError, ContractViolationError, DivergenceError

__version__ = "0.1.0"

__all__ = ["ConfigError", "ContractViolationError", "DivergenceError", "__version__"]
