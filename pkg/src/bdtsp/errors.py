"""Exception types shared across the package."""


class BdtspError(Exception):
    """Base class for package errors."""


class InputError(BdtspError):
    """Malformed instance file, bad CLI argument, or invalid constructor input."""


class InfeasibleError(BdtspError):
    """A reduction or propagation step proved the current branch has no tour.

    This is a control-flow signal inside the solver, not a user error: the
    predicate maps it to ``false``.
    """


class ResourceLimitError(BdtspError):
    """An operation was asked to exceed its documented size guard."""


class UnsupportedDegreeError(BdtspError):
    """Instance degree bound outside the supported 3..7 range."""


class InternalError(BdtspError):
    """Invariant violation that indicates a bug, not an input condition."""
