"""Exception types shared across the toolkit."""


class KlDescentError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(KlDescentError, ValueError):
    """An argument is outside its documented domain (non-finite, wrong sign, ...)."""


class LogicError(KlDescentError, RuntimeError):
    """A data structure was driven outside its contract (caller bug)."""


class BacktrackingFailureError(KlDescentError):
    """The inner stepsize search exhausted its trial budget without acceptance.

    Carries the outer iteration ``k``, the last trial index ``j`` and the last
    trial stepsize weight ``gamma`` so the failure can be reported precisely.
    """

    def __init__(self, message, *, k=None, j=None, gamma=None):
        super().__init__(message)
        self.k = k
        self.j = j
        self.gamma = gamma


class OracleInconsistencyError(KlDescentError):
    """An oracle returned a value inconsistent with its own contract."""


class FrameworkViolationError(KlDescentError):
    """A trace quantity that must be nonnegative by construction is genuinely negative."""


class InsufficientTraceError(KlDescentError):
    """The trace lacks fields required by the requested diagnostic."""
