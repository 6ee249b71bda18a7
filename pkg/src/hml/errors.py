"""Exception types shared across the package."""


class HMLError(Exception):
    pass


class ParameterError(HMLError, ValueError):
    """Bad argument value (unsupported weight, too-short series, ...)."""


class DomainError(HMLError, ValueError):
    """Argument outside the region where a formula is defined."""


class ConsistencyError(HMLError, RuntimeError):
    """An internal invariant was violated. Indicates a bug."""


class DegenerateSpectrumError(HMLError, ArithmeticError):
    pass


class PrecisionError(HMLError, ArithmeticError):
    pass


class InsufficientTableError(HMLError, IndexError):
    """Requested coefficient lies beyond the computed eigenvalue table."""


class ResourceError(HMLError, RuntimeError):
    """A computation exceeded its panel/term budget.

    ``estimate`` and ``gap`` carry the best value reached and the last
    difference between refinement levels, when available.
    """

    def __init__(self, message, estimate=None, gap=None):
        super().__init__(message)
        self.estimate = estimate
        self.gap = gap


class ConditioningError(HMLError, ArithmeticError):
    pass


class CacheMissError(HMLError, LookupError):
    pass
