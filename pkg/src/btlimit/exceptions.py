"""Exception types raised by btlimit."""


class BtlimitError(Exception):
    """Base class for all package errors."""


class ResolutionError(BtlimitError):
    """A requested quantity is below what the discretization can resolve."""


class ConvergenceError(BtlimitError):
    """An iterative routine stopped at its iteration cap without converging."""


class MismatchError(BtlimitError, ValueError):
    """Two objects that must share a discretization or parameters do not."""
