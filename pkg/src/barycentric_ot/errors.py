"""Exception hierarchy shared by every solver in the package."""


class BarycentricOTError(Exception):
    """Base class for all package errors."""


class InvalidMeasure(BarycentricOTError, ValueError):
    pass


class NonPositiveWeight(InvalidMeasure):
    pass


class DimensionMismatch(InvalidMeasure):
    pass


class EmptySupport(InvalidMeasure):
    pass


class NonFiniteEntry(InvalidMeasure):
    pass


class NumericBreakdown(BarycentricOTError, ArithmeticError):
    """Pivoting or a numerical consistency check failed."""


class IterationLimit(BarycentricOTError, RuntimeError):
    pass


class NotConverged(BarycentricOTError, RuntimeError):
    pass


class OrderViolated(BarycentricOTError):
    pass


class MapAtomMissing(BarycentricOTError, KeyError):
    pass


class DegeneratePotentials(BarycentricOTError):
    pass


class OutsideDomain(BarycentricOTError, ValueError):
    pass


class DegenerateSimplex(BarycentricOTError, ValueError):
    pass


class BarycenterOnBoundary(BarycentricOTError, ValueError):
    pass


class NoConvergence(BarycentricOTError, RuntimeError):
    pass


class NegativeLambda(BarycentricOTError, ValueError):
    pass


class TooLarge(BarycentricOTError, ValueError):
    pass


class PreconditionIcxFails(BarycentricOTError):
    pass
