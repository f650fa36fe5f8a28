"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Argument outside an operation's domain (wrong shape, bad label, ...)."""


class NotInvolutionError(InvalidInputError):
    """Operator expected to square to the identity does not."""


class DegenerateBranchError(RuntimeError):
    """A measurement selected a branch whose probability is numerically zero."""


class ConsistencyError(RuntimeError):
    """Internal numerical invariant violated (probabilities out of range, ...)."""
