"""Exception types shared across the package."""


class RabicError(Exception):
    """Base class for all package errors."""


class DomainError(RabicError, ValueError):
    """An argument lies outside the domain of an operation."""


class ContractError(RabicError, ValueError):
    """Inputs violate a shape or consistency contract (e.g. dimension mismatch)."""


class NumericError(RabicError, ArithmeticError):
    """A computation produced a non-finite or ill-conditioned result.

    ``t`` carries the simulation time at which the failure was detected,
    when known.
    """

    def __init__(self, message, t=None):
        if t is not None:
            message = f"{message} (t={t:.6g} s)"
        super().__init__(message)
        self.t = t


class ConfigError(RabicError, ValueError):
    """A scenario configuration is malformed. ``field`` is the dotted path."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class SimulationDiverged(NumericError):
    """A closed-loop run blew up. ``log`` holds every row recorded before the abort."""

    def __init__(self, message, t=None, log=None):
        super().__init__(message, t=t)
        self.log = log
