"""Exception types shared across the package."""

from __future__ import annotations


class TwistFluctError(Exception):
    """Base class for all library errors."""


class DimensionError(TwistFluctError, ValueError):
    pass


class NotAntiunitaryError(TwistFluctError, ValueError):
    pass


class AlgebraMismatchError(TwistFluctError, ValueError):
    pass


class IrregularTwistError(TwistFluctError):
    """The automorphism fails the regularity condition rho(a*) = (rho^-1(a))*."""


class IdentityViolation(TwistFluctError):
    """An identity that must hold for a well-formed triple was violated."""

    def __init__(self, message: str, residuals: dict | None = None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class NotInvariantError(TwistFluctError):
    pass


class RankDeficiencyError(TwistFluctError):
    def __init__(self, message: str, singular_values=None, gap: float | None = None):
        super().__init__(message)
        self.singular_values = singular_values
        self.gap = gap


class NotWellDefinedError(TwistFluctError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class PrecheckError(TwistFluctError):
    pass


class InconsistentCertificate(TwistFluctError):
    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NoSuchConjugationError(TwistFluctError):
    pass


class UnsupportedDimensionError(TwistFluctError, ValueError):
    pass


class SchemaError(TwistFluctError, ValueError):
    """Input document does not match the expected schema.

    ``pointer`` is a JSON pointer to the offending location.
    """

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"
