"""Exception types shared across the package."""


class VoxevalError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(VoxevalError, ValueError):
    """Invalid argument values, shapes, or dtypes."""


class FormatError(VoxevalError, ValueError):
    """Malformed or unsupported file content."""
