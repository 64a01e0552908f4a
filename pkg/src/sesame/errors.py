"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: UsageError -> 2, DataError -> 3,
NumericError -> 4.
"""


class SesameError(Exception):
    """Base class for all package errors."""


class UsageError(SesameError):
    """Bad arguments or an invalid call (wrong k, bad threshold, ...)."""


class DataError(SesameError):
    """Malformed or inconsistent input data (files, corpora, labels)."""


class ShapeError(SesameError):
    """Incompatible array shapes in a numeric operation."""


class NumericError(SesameError):
    """Non-finite values or a numerically failed computation."""
