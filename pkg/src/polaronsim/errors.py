"""Exception types raised across the toolkit."""


class PolaronSimError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(PolaronSimError, ValueError):
    """Inconsistent or malformed model/protocol parameters."""


class CapacityError(PolaronSimError, ValueError):
    """A dense representation would exceed the supported register size."""


class CompileError(PolaronSimError, ValueError):
    """A Hamiltonian term cannot be compiled into gates."""


class DivergenceError(PolaronSimError, ArithmeticError):
    """A coupling regularization hits its pole."""


class NumericalError(PolaronSimError, ArithmeticError):
    """A numerical routine failed (non-Hermitian input, singular matrix, ...)."""
