"""Exception types raised by the library."""


class JcacoError(Exception):
    """Base class for all library errors."""


class ConfigurationError(JcacoError, ValueError):
    """Invalid generation, run, or sweep configuration."""


class CapacityError(JcacoError, ValueError):
    """A request would blow past a hard size limit (e.g. exhaustive enumeration)."""


class DomainError(JcacoError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""
