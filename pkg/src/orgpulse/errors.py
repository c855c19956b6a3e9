"""Exception types shared across the corpus pipeline.

Every exception carries a stable ``code`` string, used verbatim in
validation reports and CLI output, plus an optional 1-based ``line``
locator for errors raised while reading a file.
"""

from __future__ import annotations


class OrgPulseError(Exception):
    """Base class for all errors raised by this package."""

    code = "Error"

    def __init__(
        self, message: str, *, line: int | None = None, source: str | None = None
    ) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.source = source

    def __str__(self) -> str:
        where = ""
        if self.source is not None:
            where += f" in {self.source}"
        if self.line is not None:
            where += f" (line {self.line})"
        return f"{self.code}{where}: {self.message}"


class InvariantViolation(OrgPulseError):
    """A domain object was constructed in a state its invariants forbid."""

    code = "InvariantViolation"


class CorpusSyntaxError(OrgPulseError):
    """Malformed roster, meetings, or config input."""

    code = "SyntaxError"


class DuplicateParticipantError(OrgPulseError):
    code = "DuplicateParticipant"


class NonMonotoneAssignmentError(OrgPulseError):
    code = "NonMonotoneAssignment"


class UnknownSchemeError(OrgPulseError):
    code = "UnknownScheme"


class UnknownParticipantError(OrgPulseError):
    code = "UnknownParticipant"


class SampleOutOfRangeError(OrgPulseError):
    code = "SampleOutOfRange"


class DurationMismatchError(OrgPulseError):
    code = "DurationMismatch"


class NoAssignmentInEffectError(OrgPulseError):
    code = "NoAssignmentInEffect"


class DateBeforeHireError(OrgPulseError):
    code = "DateBeforeHire"


class MissingHireDateError(OrgPulseError):
    code = "MissingHireDate"


class EmptyCategoryError(OrgPulseError):
    code = "EmptyCategory"


class NoActiveCategoriesError(OrgPulseError):
    code = "NoActiveCategories"


class BadIdealError(OrgPulseError):
    code = "BadIdeal"


class ConfigInvalidError(OrgPulseError):
    code = "ConfigInvalid"
