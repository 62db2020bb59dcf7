"""Exception types raised across the package."""


class ShakenLatticeError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(ShakenLatticeError, ValueError):
    pass


class NumericalFailureError(ShakenLatticeError, RuntimeError):
    """A numerical routine did not converge.

    ``details`` carries whatever diagnostics the routine had (residual
    norms, energy history, ...).
    """

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details


class InvariantDomainError(ShakenLatticeError, ValueError):
    """alpha_3 radicand negative: the trajectory leaves the real domain."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class SingularityError(ShakenLatticeError, ZeroDivisionError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DegenerateConfigurationError(ShakenLatticeError, ValueError):
    pass


class SynthesisError(ShakenLatticeError, RuntimeError):
    pass


class ControlInfeasibleError(ShakenLatticeError, ValueError):
    """Requested interference amplitude exceeds 2*V0."""

    def __init__(self, message, required_V0=None):
        super().__init__(message)
        self.required_V0 = required_V0


class IntegratorFailureError(NumericalFailureError):
    pass


class ConfigValidationError(ShakenLatticeError, ValueError):
    pass
