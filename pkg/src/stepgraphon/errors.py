"""Exception hierarchy shared by all modules."""


class GraphonError(ValueError):
    """Base class for validation and domain errors."""


class NonSymmetric(GraphonError):
    pass


class BadWeights(GraphonError):
    pass


class RangeViolation(GraphonError):
    pass


class WeightMismatch(GraphonError):
    pass


class RefinementTooLarge(GraphonError):
    pass


class EmptyPart(GraphonError):
    pass


class LabelMismatch(GraphonError):
    pass


class TooLargeForExact(GraphonError):
    pass


class ComplexityCap(GraphonError):
    """Density evaluation would exceed the multiply-add budget."""


class NoEvenCycle(GraphonError):
    pass


class BadCycleLength(GraphonError):
    pass


class MassMismatch(GraphonError):
    pass


class DomainViolation(GraphonError):
    pass


class DivisibilityViolation(GraphonError):
    pass


class CannotBridge(GraphonError):
    """No stepping-of-a-version relation could be established."""


class TheoryViolation(RuntimeError):
    """An inequality guaranteed by theory failed on a concrete instance."""


class IterationCapExceeded(TheoryViolation):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class BoundNotMet(TheoryViolation):
    pass


class ConcentrationFailure(TheoryViolation):
    pass
