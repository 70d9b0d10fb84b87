"""Exception types shared across the package."""


class HeisPmcError(Exception):
    """Base class."""


class InvalidParameter(HeisPmcError, ValueError):
    """A parameter is outside its admissible range (e.g. eps == 0)."""


class DomainError(HeisPmcError, ValueError):
    """Degenerate, too coarse, or emptied domain."""


class StencilUnderflow(HeisPmcError):
    """The domain leaves no room for the finite-difference stencil."""


class CharacteristicPointError(HeisPmcError):
    """Evaluation requested where Du + X vanishes."""


class InfeasibleDomainError(HeisPmcError):
    """|int H| exceeds the perimeter: no solution exists on this domain."""


class NoConvergence(HeisPmcError):
    """Raised only when a caller asks for it; solvers normally return a report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
