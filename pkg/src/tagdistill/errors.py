"""Exception hierarchy shared across the pipeline."""


class TagDistillError(Exception):
    """Base class for all pipeline errors."""

    kind = "Error"

    def __str__(self) -> str:
        msg = super().__str__()
        return f"{self.kind}: {msg}" if msg else self.kind


class ParseError(TagDistillError):
    kind = "ParseError"


class ValidationError(TagDistillError):
    """Raised when a loaded object violates its invariants.

    Carries the full list of violations so callers can report every
    problem in one pass instead of fixing them one at a time.
    """

    kind = "ValidationError"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class DuplicateIdError(TagDistillError):
    kind = "DuplicateId"


class MalformedLineError(TagDistillError):
    kind = "MalformedLine"

    def __init__(self, line_number: int, detail: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {detail}")


class EmptyDistributionError(TagDistillError):
    kind = "EmptyDistribution"


class InfeasibleTargetError(TagDistillError):
    kind = "InfeasibleTarget"


class NotJsonError(TagDistillError):
    kind = "NotJson"


class UnknownLabelError(TagDistillError):
    kind = "UnknownLabel"

    def __init__(self, label: str):
        self.label = label
        super().__init__(label)


class SegmentNotFoundError(TagDistillError):
    kind = "SegmentNotFound"

    def __init__(self, text_prefix: str):
        self.text_prefix = text_prefix
        super().__init__(text_prefix)


class OverlapAfterLocationError(TagDistillError):
    kind = "OverlapAfterLocation"


class EndpointUnreachableError(TagDistillError):
    kind = "EndpointUnreachable"


class TransportError(TagDistillError):
    """A chat-endpoint request failed at the HTTP/network layer."""

    kind = "TransportError"


class EmptyTextError(TagDistillError):
    kind = "EmptyText"


class DegenerateDataError(TagDistillError):
    kind = "DegenerateData"


class NonFiniteLossError(TagDistillError):
    kind = "NonFiniteLoss"


class ShapeMismatchError(TagDistillError):
    kind = "ShapeMismatch"


class NotAProbabilityError(TagDistillError):
    kind = "NotAProbability"


class UnknownIdError(TagDistillError):
    kind = "UnknownId"


class LengthMismatchError(TagDistillError):
    kind = "LengthMismatch"


class EmptyInputError(TagDistillError):
    kind = "EmptyInput"


class DegenerateAllError(TagDistillError):
    kind = "DegenerateAll"


class InconsistentLabelSetsError(TagDistillError):
    kind = "InconsistentLabelSets"


class CorruptLogError(TagDistillError):
    kind = "CorruptLog"

    def __init__(self, line_number: int, detail: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {detail}")


class UnknownTaskError(TagDistillError):
    kind = "UnknownTask"


class InvalidSegmentsError(TagDistillError):
    kind = "InvalidSegments"

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NothingValidatedError(TagDistillError):
    kind = "NothingValidated"


class WorkspaceLockedError(TagDistillError):
    kind = "WorkspaceLocked"
