"""Exception types carrying a machine-readable failure code."""

from __future__ import annotations


class SpectralError(Exception):
    """Base class for every failure raised by the package.

    Parameters
    ----------
    code : str
        Short upper-case tag such as ``"GAP"`` or ``"TRACE_STALL"``.
    message : str
        Human-readable explanation.
    details : dict, optional
        Extra context (offending values, last good state, hints).
    """

    def __init__(self, code: str, message: str, **details):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.details = details


class ValidationError(SpectralError, ValueError):
    """Rejected input: the request itself is malformed."""


class NumericalError(SpectralError, ArithmeticError):
    """A numerical procedure could not deliver a trustworthy result."""
