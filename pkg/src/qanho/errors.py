"""Exception hierarchy shared by the numerical modules."""


class QanhoError(Exception):
    """Base class for all errors raised by this package."""


class PrecisionError(QanhoError, ValueError):
    """A requested precision is invalid or exceeds what a context carries."""


class ContextMismatchError(QanhoError, TypeError):
    """Arithmetic was attempted between values of different precision contexts."""


class NoSignChangeError(QanhoError, ValueError):
    """A root search was started on an interval without a sign change."""


class ConvergenceError(QanhoError, RuntimeError):
    """An iterative method ran out of iterations or stagnated."""


class CheckpointError(QanhoError):
    """A checkpoint file is unreadable or belongs to a different schedule."""
