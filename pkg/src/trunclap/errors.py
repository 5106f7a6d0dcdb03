"""Exception types raised across the package."""


class TrunclapError(Exception):
    """Base class for every error raised by trunclap."""


class InvalidParams(TrunclapError, ValueError):
    pass


class InvalidExponent(InvalidParams):
    pass


class InvalidMatchRadius(InvalidParams):
    pass


class InvalidMode(InvalidParams):
    pass


class NonSymmetric(InvalidParams):
    pass


class IneligibleProfile(TrunclapError):
    """The profile's declared flags do not license the requested fast path."""


class NonConvergent(TrunclapError):
    """Quadrature budget exhausted; the partial result is kept on ``result``."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DivergentTail(TrunclapError):
    pass


class DivergentSingularity(TrunclapError):
    pass


class BracketNotFound(TrunclapError):
    pass


class OptimizerStalled(TrunclapError):
    """Only raised on request; by default the optimizer returns a flagged result."""
