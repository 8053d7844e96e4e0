"""Exception hierarchy.

Every numerical failure derives from :class:`NumericalError` so callers (and
the command line front end) can separate them from plain usage errors.
"""


class FrechetError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(FrechetError, ValueError):
    pass


class ParseError(FrechetError, ValueError):
    """Malformed Matrix Market or vector file."""

    def __init__(self, msg, line=None):
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class UnsupportedField(FrechetError, ValueError):
    pass


class UnsupportedFunction(FrechetError, ValueError):
    pass


class NumericalError(FrechetError, ArithmeticError):
    """The computation cannot continue or did not converge."""


class NotHermitian(NumericalError):
    pass


class Singular(NumericalError):
    pass


class ZeroStartVector(NumericalError):
    pass


class SeriousBreakdown(NumericalError):
    def __init__(self, step):
        super().__init__(f"serious breakdown in two-sided Lanczos at step {step}")
        self.step = step


class StartVectorsBiorthogonal(NumericalError):
    pass


class DeflationDetected(NumericalError):
    def __init__(self, step):
        super().__init__(f"block Krylov basis lost rank at step {step}")
        self.step = step


class SpectrumOnClosedNegativeAxis(NumericalError):
    pass


class QuadratureNotConverged(NumericalError):
    pass


class MaxDimensionReached(NumericalError):
    def __init__(self, msg, result=None, record=None):
        super().__init__(msg)
        self.result = result
        self.record = record
