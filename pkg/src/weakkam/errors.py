"""Exception types shared across the toolkit.

The command line maps these onto process exit codes: configuration
problems exit 2, numerical failures exit 3, input/output failures 4.
"""


class WeakKamError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(WeakKamError):
    """Invalid configuration: unknown names, out-of-range values, bad schema."""


class NumericalError(WeakKamError):
    """Numerical failure: non-convergence, unreachable graph, degenerate input."""


class ArtifactError(WeakKamError):
    """Input/output failure while reading or writing artifacts."""
