"""
Domain error hierarchy.

Every error raised by the engine derives from ``QSeriesError`` and from the
builtin exception that best describes it, so callers can catch either.
"""

from typing import Optional


class QSeriesError(Exception):
    """Base class for all engine errors."""


class TruncationError(QSeriesError, IndexError):
    """A coefficient or scan index lies beyond the known truncation order."""


class ModeMismatchError(QSeriesError, TypeError):
    """Exact and modular series (or two different moduli) were combined."""


class NonUnitError(QSeriesError, ArithmeticError):
    """A series with a non-invertible constant term was inverted."""


class ExpressionError(QSeriesError, ValueError):
    """A malformed expression tree or an invalid expansion request."""


class ExpressionParseError(ExpressionError):
    """Text grammar error with the 0-based position of the offending character."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}: {text!r}")

    def pointer(self) -> str:
        """Render the input with a caret under the error position."""
        return f"{self.text}\n{' ' * self.position}^"


class RegistryError(QSeriesError, KeyError):
    """Unknown or duplicate identity ids, or an unreadable registry file."""

    def __init__(self, message: str, identity_id: Optional[str] = None):
        self.identity_id = identity_id
        super().__init__(message)

    def __str__(self) -> str:
        return str(self.args[0])


class IneligiblePrimeError(QSeriesError, ValueError):
    """A prime fails the Legendre eligibility test or falls outside a supported range."""
