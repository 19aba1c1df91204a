class SrlpLabError(Exception):
    """Base class for all library errors."""


class InvalidSpec(SrlpLabError, ValueError):
    pass


class InvalidBase(SrlpLabError, ValueError):
    """Base walk unsuitable for the counterexample construction."""


class DegenerateInput(SrlpLabError, ValueError):
    pass


class ThetaBelowEta(SrlpLabError, ValueError):
    """A nonpositive Q_j(theta) was met, so theta lies below the spectral edge."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConvergenceFailure(SrlpLabError, ArithmeticError):
    pass


class NotConverged(SrlpLabError, ArithmeticError):
    """Raised by the edge estimator; ``estimate`` holds the partial result."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ResourceLimit(SrlpLabError, RuntimeError):
    pass


class NonComparable(SrlpLabError, ValueError):
    """Ratio request whose denominator vanishes on the shared parity grid."""
