"""Exception hierarchy shared by all modules."""


class OpDiffError(Exception):
    """Base class for every error raised by the package."""


class DomainError(OpDiffError, ValueError):
    """An argument lies outside the region where the quantity is defined."""


class TruncationError(OpDiffError):
    """The truncation degree is too small to answer the request exactly."""


class HypothesisError(OpDiffError):
    """A structural hypothesis required by a closed-form result fails.

    ``hypothesis`` names the violated condition in plain words so that the
    CLI can surface it.
    """

    def __init__(self, message: str, hypothesis: str = ""):
        super().__init__(message)
        self.hypothesis = hypothesis or message


class SelfMapError(HypothesisError):
    """A symbol does not map the closed disk strictly inside the unit disk."""


class NoInteriorFixedPointError(HypothesisError):
    """Forward iteration of a symbol did not settle on an interior point."""


class ZeroFunctionError(OpDiffError):
    """All Taylor coefficients at a point vanish up to the truncation degree."""


class ConvergenceError(OpDiffError):
    """An iterative solver hit its iteration cap.

    The last iterate is kept on ``last`` for diagnostics.
    """

    def __init__(self, message: str, last=None):
        super().__init__(message)
        self.last = last


class SpecFormatError(OpDiffError, ValueError):
    """An operator-spec document does not match the expected schema."""
