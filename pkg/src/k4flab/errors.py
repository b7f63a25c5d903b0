"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
NumericError -> 3. Partial experiment results are signalled by the
harness itself (exit 4), not by an exception type.
"""


class K4LabError(Exception):
    """Base class for package errors."""


class ConfigError(K4LabError):
    """Invalid configuration or arguments."""


class NumericError(K4LabError):
    """A numerical guard tripped (overflow, invalid domain, divergence)."""
