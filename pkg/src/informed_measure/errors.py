"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`InformedMeasureError`, so callers (and the CLI) can separate domain
failures from programming errors.
"""


class InformedMeasureError(Exception):
    """Base class for all library errors."""


class EvaluationError(InformedMeasureError):
    """A function evaluated to a non-finite value on some observation."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DomainError(InformedMeasureError, ValueError):
    """An argument lies outside the domain of the operation."""


class AlreadyCentered(InformedMeasureError):
    pass


class NotCentered(InformedMeasureError):
    pass


class NumericalError(InformedMeasureError):
    """A numerical routine failed to terminate or lost accuracy."""


class NotPositiveDefinite(NumericalError):
    pass


class SingularVariance(NumericalError):
    """The empirical variance matrix of the constraints is not invertible."""


class InfeasibleConstraints(InformedMeasureError):
    """The target is not in the convex hull of the constraint evaluations."""


class RankDeficient(InformedMeasureError):
    """The ones vector and the constraint columns are linearly dependent."""


class DegenerateConstraints(InformedMeasureError):
    """Every constraint column is zero."""


class NoConvergence(NumericalError):
    """A dual solver hit its iteration cap.

    The partially converged weights and report are attached so callers can
    inspect how far the solve got.
    """

    def __init__(self, message, weights=None, report=None):
        super().__init__(message)
        self.weights = weights
        self.report = report

    @property
    def iterations(self):
        return None if self.report is None else self.report.iterations
