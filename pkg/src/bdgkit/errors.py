"""Exception hierarchy shared by the engine and the CLI."""


class BdgError(Exception):
    """Base class for every error raised by bdgkit."""


class StructuralError(BdgError, ValueError):
    """Shapes, dimensions or spaces of the operands do not fit together."""


class ValidationError(BdgError, ValueError):
    """An input violates a measurability, martingale or dominance requirement."""


class DomainError(BdgError, ValueError):
    """A numeric parameter is outside the range where the operation is defined."""


class CapacityError(BdgError):
    """The requested object would exceed the configured size cap."""


class UnsupportedError(BdgError, NotImplementedError):
    """The combination of inputs is deliberately not covered."""


class ConfigError(BdgError, ValueError):
    """An experiment configuration is malformed."""
