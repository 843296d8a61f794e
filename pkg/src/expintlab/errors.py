"""Exception types raised across the package."""


class ExpIntError(Exception):
    """Base class for all package errors."""


class DimensionError(ExpIntError, ValueError):
    pass


class GridMismatchError(ExpIntError, ValueError):
    pass


class InvariantError(ExpIntError, ValueError):
    pass


class UnsupportedOrderError(ExpIntError, ValueError):
    pass


class ContractViolationError(ExpIntError, ValueError):
    """An operator spectrum leaves the closed left half-plane."""


class ContractionGuardError(ExpIntError):
    """Step size too large for the stage fixed-point map to be a contraction."""


class StageDivergenceError(ExpIntError):
    def __init__(self, message, residual=float("nan"), iterations=0, step_index=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step_index = step_index


class BlowUpError(ExpIntError):
    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class DegenerateLadderError(ExpIntError, ValueError):
    pass


class UnreliableReferenceError(ExpIntError):
    def __init__(self, message, difference=float("nan")):
        super().__init__(message)
        self.difference = difference


class ResolvableRangeError(ExpIntError, ValueError):
    pass


class ConfigError(ExpIntError, ValueError):
    pass
