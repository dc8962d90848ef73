"""Exception hierarchy shared by all modules."""


class QDSError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatch(QDSError, ValueError):
    pass


class InvalidInput(QDSError, ValueError):
    """Input violates a documented invariant (non-unital map, non-unitary gauge, ...)."""


class NotAlgebraError(QDSError):
    pass


class NonFaithfulStateError(QDSError):
    """Raised where a faithful state is required; reduce to the support first."""


class NonInvariantStateError(QDSError):
    pass


class NotSubharmonicError(QDSError):
    pass


class CapExceededError(QDSError):
    pass


class HorizonError(QDSError):
    """Shift or embedding requested beyond the finite horizon."""


class AmbiguousReductionError(QDSError):
    pass


class VerificationError(QDSError):
    """A numerical post-condition failed; ``residuals`` carries the offending values."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class DisagreementError(VerificationError):
    """Two independent routes to the same verdict disagree."""
