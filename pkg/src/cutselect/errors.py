"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class CutselectError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(CutselectError):
    """Bad argument values or misuse of an operation (CLI exit code 1)."""


class FormatError(CutselectError):
    """Unreadable or internally inconsistent input data (CLI exit code 2)."""


class DegenerateError(CutselectError):
    """Numerically degenerate input: a result is undefined for this data (CLI exit code 3)."""


class MethodUnavailableError(ParameterError):
    """The requested method needs inputs this dataset does not provide."""
