"""Exception hierarchy shared by the engines and the command line."""


class SyncError(Exception):
    """Base class for all errors raised by linsync."""


class InvalidInputError(SyncError, ValueError):
    """Arguments violate a documented precondition."""


class InfeasibleSpecError(SyncError):
    """A generator spec cannot be realised (e.g. cluster centres do not fit)."""


class IndexCorruptionError(SyncError, RuntimeError):
    """An internal index (grid membership, parent forest) is inconsistent."""


class GridCapExceeded(SyncError):
    """The requested grid would materialise more cells than allowed."""
