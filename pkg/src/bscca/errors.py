"""Exception types shared across the package."""


class SccaError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    code = "E_GENERIC"


class InputError(SccaError, ValueError):
    """Invalid argument, malformed file or inconsistent data."""

    exit_code = 2
    code = "E_INPUT"


class NumericalError(SccaError, ArithmeticError):
    """A factorization failed or an invariant such as positive definiteness broke."""

    exit_code = 3
    code = "E_NUMERIC"


class StorageError(SccaError, OSError):
    """Output could not be written or input could not be read."""

    exit_code = 4
    code = "E_IO"
