"""Exception hierarchy shared by every module."""


class PermstatError(Exception):
    """Base class for library errors."""


class InvalidSizeError(PermstatError, ValueError):
    """A size argument (N, n, K, B, ...) is outside its allowed range."""


class DataError(PermstatError, ValueError):
    """Input data is malformed: wrong shape, non-finite, asymmetric, ..."""


class DegenerateError(PermstatError, ValueError):
    """The requested quantity divides by a zero variance."""


class CapExceededError(PermstatError, ValueError):
    """An exhaustive computation would exceed its configured cap."""
