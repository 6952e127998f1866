"""Exception hierarchy shared by the whole package."""


class UstatError(Exception):
    """Base class for every error raised by :mod:`ustat_gof`."""


class DomainError(UstatError, ValueError):
    """An argument lies outside the domain of the requested function."""


class DataError(UstatError):
    """A sample cannot be used as input (maps to CLI exit code 3)."""


class SampleTooSmall(DataError, ValueError):
    """Fewer observations than the operation requires."""


class DegenerateSample(DataError, ValueError):
    """All observations coincide, so the fitted scale would be zero."""


class ParseError(DataError, ValueError):
    """A data file could not be parsed.

    Parameters
    ----------
    message:
        Human readable description.
    line:
        1-based line number of the offending line, if known.
    path:
        File being parsed, if known.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class NumericalError(UstatError, ArithmeticError):
    """A numerical procedure failed (maps to CLI exit code 4)."""


class NonConvergence(NumericalError):
    """An iterative solver exhausted its budget before meeting tolerance."""


class NotPositiveDefinite(NumericalError):
    """A covariance-type matrix failed its Cholesky factorisation."""


class BackendAccuracy(NumericalError):
    """A Monte Carlo expectation is noisier than the caller allowed."""


class ReductionViolated(NumericalError):
    """The nuisance drift did not vanish from the local-alternative drift."""
