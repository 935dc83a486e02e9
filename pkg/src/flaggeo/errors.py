"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) and an
optional ``block`` index for per-block failures on flags. ``DomainError``
subclasses signal that the inputs are valid but outside the domain of a
formula; the CLI maps them to exit code 2. Everything else is a validation
failure (exit code 1).
"""

from __future__ import annotations


class FlagGeoError(Exception):
    """Base class for all library errors."""

    def __init__(self, detail: str = "", block: int | None = None, **extra):
        super().__init__(detail)
        self.detail = detail
        self.block = block
        self.extra = extra

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        out = {"error": self.code, "detail": self.detail}
        if self.block is not None:
            out["block"] = self.block
        out.update(self.extra)
        return out


class ValidationError(FlagGeoError):
    """Input violates a structural invariant."""


class DomainError(FlagGeoError):
    """Valid input outside the domain where a formula applies."""


class DimensionMismatch(ValidationError):
    pass


class InvalidProjector(ValidationError):
    pass


class InvalidFlag(ValidationError):
    pass


class NotOrthogonal(ValidationError):
    pass


class NotTangent(ValidationError):
    pass


class NotSkew(ValidationError):
    pass


class BaseMismatch(ValidationError):
    pass


class FrameNotInFiber(ValidationError):
    pass


class DerivativeUnavailable(ValidationError):
    pass


class CutLocus(DomainError):
    pass


class LogBranch(DomainError):
    pass


class StepTooLarge(DomainError):
    pass


class DegeneratePlane(DomainError):
    pass


class IllConditioned(DomainError):
    pass


class SectionDomain(DomainError):
    pass


class AmbiguousClustering(DomainError):
    pass


class SignatureChange(DomainError):
    pass


class CutLocusReached(DomainError):
    """Tracking left the domain; ``partial`` holds the result computed so far."""

    def __init__(self, detail: str = "", block: int | None = None, partial=None, **extra):
        super().__init__(detail, block, **extra)
        self.partial = partial


class NonGeneric(DomainError):
    """A spectrum collapsed to a single cluster, so there is no flag."""
