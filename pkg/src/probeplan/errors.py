"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class ProbePlanError(Exception):
    """Base class for every error raised by this package."""


class MalformedName(ProbePlanError, ValueError):
    pass


class PropertyConflict(ProbePlanError):
    pass


class DuplicatePoint(ProbePlanError, ValueError):
    pass


class CardinalityMismatch(ProbePlanError):
    pass


class InvalidScene(ProbePlanError, ValueError):
    pass


class ActionDimensionMismatch(ProbePlanError, ValueError):
    pass


class MissingProperty(ProbePlanError, ValueError):
    pass


class UnsupportedInstruction(ProbePlanError, ValueError):
    pass


class UnknownAction(ProbePlanError):
    pass


class UnknownObject(ProbePlanError):
    pass


class TraceMismatch(ProbePlanError, ValueError):
    pass


class InapplicableFault(ProbePlanError, ValueError):
    pass


class GenerationExhausted(ProbePlanError):
    pass


class AdapterFailure(ProbePlanError):
    pass


class ParseFailure(AdapterFailure):
    """Response text did not match the role's payload grammar.

    ``span`` holds the offending fragment of the response (possibly empty).
    """

    def __init__(self, message: str, span: str = "") -> None:
        super().__init__(message if not span else f"{message}: {span!r}")
        self.span = span


class ReplayMiss(AdapterFailure):
    pass


class IncompleteContext(ProbePlanError, ValueError):
    pass
