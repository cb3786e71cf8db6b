"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numerical failures with 3, violated model properties with 4.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad key, type, or constraint violation."""


class NumericsError(RuntimeError):
    """A solver or integrator failed (singular system, non-convergence)."""


class PropertyViolation(RuntimeError):
    """A structural property the model guarantees was violated numerically."""


class UnsupportedOrderError(ValueError):
    """Moment order outside the integrable range m > -1."""


class NotApplicableError(RuntimeError):
    """Requested quantity is undefined for the given coefficients."""
