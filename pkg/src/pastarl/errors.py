"""Error types shared across the toolkit.

Exit-code mapping used by the CLI: ConfigError -> 2, DivergenceError -> 3.
"""


class ConfigError(ValueError):
    """Invalid configuration value, unknown key, or malformed input file."""


class ContractViolationError(ValueError):
    """Caller broke an API contract (shape mismatch, stale tape, bad range)."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite quantity; message names the module."""
