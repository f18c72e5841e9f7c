"""Exception hierarchy shared by all modules."""


class QcqpError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(QcqpError, ValueError):
    """Input data violates a structural requirement (shape, Hermitian-ness, finiteness)."""


class NotPositiveDefiniteError(QcqpError, ValueError):
    """A shifted matrix ``A + shift*I`` is not positive definite."""


class InfeasibleSubproblemError(QcqpError):
    """The single-constraint projection found no feasible point."""


class ParameterError(QcqpError, ValueError):
    """A solver parameter is outside its admissible range."""


class OracleInconclusive(QcqpError):
    """A brute-force reference could not produce a usable answer.

    This is not a solver failure; callers typically skip the comparison.
    """
