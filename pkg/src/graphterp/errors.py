"""Exception types raised by graphterp."""


class GraphterpError(Exception):
    """Base class for all graphterp errors."""


class SelfLoopError(GraphterpError, ValueError):
    pass


class NonPositiveWeightError(GraphterpError, ValueError):
    pass


class DuplicateEdgeError(GraphterpError, ValueError):
    pass


class IndexOutOfRangeError(GraphterpError, IndexError):
    pass


class DimensionMismatchError(GraphterpError, ValueError):
    pass


class ConvergenceFailureError(GraphterpError, RuntimeError):
    """Eigensolver failed to converge."""


class EmptyUnknownSetError(GraphterpError, ValueError):
    """Every vertex is sampled; there is nothing to interpolate."""


class NegativeEigenvalueError(GraphterpError, ArithmeticError):
    """A matrix that must be PSD produced an eigenvalue below tolerance."""


class RankDeficientError(GraphterpError, ArithmeticError):
    """The sampled basis columns are rank deficient; the requested cutoff is
    too large for this sample set."""


class NoBasisVectorsError(GraphterpError, ValueError):
    """No eigenvalue lies below the cutoff, so the band-limited subspace is empty."""


class DivergenceDetectedError(GraphterpError, ArithmeticError):
    """Iterate norm blew up; the step size violates the convergence bound."""


class SingularSystemError(GraphterpError, ArithmeticError):
    """Regularized system is numerically singular; caller should fall back."""


class ColdStartUserError(GraphterpError, ValueError):
    """User has no known ratings to interpolate from."""


class ParseError(GraphterpError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OutOfScaleRatingError(GraphterpError, ValueError):
    pass


class TooFewEntriesError(GraphterpError, ValueError):
    pass


class EmptyInputError(GraphterpError, ValueError):
    pass
