"""Exception hierarchy shared by every module of the package."""


class CQExpError(Exception):
    """Base class for all errors raised by :mod:`cqexp`."""


class InvalidOperator(CQExpError, ValueError):
    """Matrix is not Hermitian, not PSD, or not a valid density operator."""


class InvalidParameter(CQExpError, ValueError):
    """A scalar parameter lies outside its admissible range."""


class InvalidChannel(CQExpError, ValueError):
    """Channel outputs have inconsistent shapes or the prior does not match."""


class InvalidRate(CQExpError, ValueError):
    """Rate outside the interval required by a bound."""


class InvalidSymmetry(CQExpError, ValueError):
    """Symmetry generator is not unitary or does not have the stated order."""


class DisjointSupport(CQExpError, ValueError):
    """Two distributions share no common support."""


class InfeasibleRate(CQExpError, ValueError):
    """Requested rate is outside the range reachable by the tilted family."""


class NumericalFailure(CQExpError, RuntimeError):
    """An iterative routine did not meet its convergence criterion.

    Attributes:
        diagnostics: free-form dictionary carrying the last iterate, residuals
            and anything else useful for a post-mortem.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConditionNotMet(CQExpError, ValueError):
    """A precondition of a theorem-backed bound does not hold.

    Attributes:
        condition: short name of the failing inequality.
        attained: value of the left hand side that failed the check.
    """

    def __init__(self, message, condition=None, attained=None):
        super().__init__(message)
        self.condition = condition
        self.attained = attained


class CapacityExceeded(CQExpError, RuntimeError):
    """Problem size exceeds the configured dimension or enumeration cap."""


class SpecError(CQExpError, ValueError):
    """Channel-spec text could not be parsed or validated.

    Attributes:
        line: 1-based line of the offending token (``None`` if unknown).
        column: 1-based column of the offending token.
    """

    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column
