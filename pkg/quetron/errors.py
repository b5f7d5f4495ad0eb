"""Exception types raised by quetron.

All errors derive from ``ValueError`` so callers that already guard numerical
input with ``except ValueError`` keep working.
"""

from typing import Optional


class QuetronError(ValueError):
    """Base class for every error raised by the package."""


class SpecValidationError(QuetronError):
    """A network specification, density matrix or vector failed validation."""


class SingularRateError(QuetronError):
    """A coupled pair has zero coherence decay (gamma_kl + kappa_kl = 0).

    Attributes:
        pair: 1-based site pair (k, l) with the vanishing decay rate
    """

    def __init__(self, message: str, pair: Optional[tuple] = None):
        super().__init__(message)
        self.pair = pair


class IllConditionedError(QuetronError):
    """A linear solve was refused because the matrix is numerically singular.

    Attributes:
        smallest_singular_value: Smallest singular value of the offending matrix
        condition_number: Estimated condition number
    """

    def __init__(
        self,
        message: str,
        smallest_singular_value: float = 0.0,
        condition_number: float = float("inf")
    ):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value
        self.condition_number = condition_number


class DegenerateSpectrumError(QuetronError):
    """A generator has extra (near-)null directions, e.g. a disconnected network."""


class InsufficientDataError(QuetronError):
    """A slope fit had fewer usable points than required."""


class ConfigurationError(QuetronError):
    """An experiment configuration is inconsistent."""
