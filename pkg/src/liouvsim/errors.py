"""Shared exception types, mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Bad user input: parameters, config file, or flag combinations (exit 2)."""


class DimensionCapError(RuntimeError):
    """A requested object exceeds a configured size cap (exit 3)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its tolerance contract (exit 4)."""
