"""Semantic exceptions shared across the package."""


class EntcertError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EntcertError, ValueError):
    """An input violates its documented domain (bad correlation, bad grid key, ...)."""


class InfeasibleError(EntcertError):
    """No admissible solution exists under the stated constraints.

    ``payload`` optionally carries diagnostic data, e.g. the best validity
    achievable when a planning run cannot reach its target.
    """

    def __init__(self, message: str, payload=None):
        super().__init__(message)
        self.payload = payload


class UndefinedOutcomeError(EntcertError):
    """Both hypotheses assign zero probability to the outcome; no posterior exists."""


class SchemaError(EntcertError, ValueError):
    """A configuration document does not match the expected schema."""
