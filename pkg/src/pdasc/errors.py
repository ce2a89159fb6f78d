"""Exception types shared across the package."""


class PdascError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(PdascError, ValueError):
    """Operands have incompatible arity."""


class DomainError(PdascError, ValueError):
    """Operand values are outside the domain of the requested operation."""


class ParameterError(PdascError, ValueError):
    """Invalid parameter combination."""


class LoadError(PdascError, ValueError):
    """A file could not be parsed or failed validation on load."""
