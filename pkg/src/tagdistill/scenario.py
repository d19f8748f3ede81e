"""Clinical scenario definitions: label set, system message, in-context examples.

A scenario captures everything the prompt builder needs for one clinical
situation. Files are plain JSON, one scenario per file, so that
non-programmer collaborators can edit them.
"""

import json
import logging
import re
from dataclasses import dataclass, field

from .errors import ParseError, ValidationError

logger = logging.getLogger(__name__)

LABEL_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")


@dataclass(frozen=True)
class Violation:
    kind: str
    path: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.path}: {self.detail}"


@dataclass(frozen=True)
class InContextExample:
    text: str
    segments: tuple  # of (label, start, end)


@dataclass(frozen=True)
class ClinicalScenario:
    id: str
    name: str
    system_message: str
    output_instruction: str
    labels: tuple
    in_context: tuple = field(default_factory=tuple)

    @property
    def label_set(self):
        return frozenset(self.labels)


def _check_spans(text, segments, known_labels, path, violations):
    n = len(text)
    prev_end = None
    prev_start = None
    for i, (label, start, end) in enumerate(segments):
        p = f"{path}.segments[{i}]"
        if label not in known_labels:
            violations.append(Violation("UnknownLabel", p, f"label {label!r} not in scenario labels"))
        if not (0 <= start < end <= n):
            violations.append(Violation("SpanOutOfBounds", p, f"span ({start}, {end}) outside text of length {n}"))
            continue
        if prev_start is not None and start < prev_start:
            violations.append(Violation("UnsortedSpans", p, f"span starts at {start} before previous start {prev_start}"))
        if prev_end is not None and start < prev_end:
            violations.append(Violation("OverlappingSpans", p, f"span ({start}, {end}) overlaps previous ending at {prev_end}"))
        prev_start, prev_end = start, end


def validate_scenario(scenario: ClinicalScenario):
    """Return the list of invariant violations for a single scenario."""
    violations = []
    if not scenario.id:
        violations.append(Violation("EmptyId", "id", "scenario id must be non-empty"))
    if len(scenario.labels) < 2:
        violations.append(Violation("TooFewLabels", "labels", f"need at least 2 labels, got {len(scenario.labels)}"))
    seen = set()
    for i, label in enumerate(scenario.labels):
        p = f"labels[{i}]"
        if not label:
            violations.append(Violation("EmptyLabel", p, "label must be non-empty"))
        elif not LABEL_RE.match(label):
            violations.append(Violation("BadLabelFormat", p, f"label {label!r} must be uppercase letters, digits, underscores"))
        if label in seen:
            violations.append(Violation("DuplicateLabel", p, f"label {label!r} appears more than once"))
        seen.add(label)
    for j, ex in enumerate(scenario.in_context):
        _check_spans(ex.text, ex.segments, scenario.label_set, f"in_context[{j}]", violations)
    return violations


def validate_scenario_set(scenarios):
    """Validate a collection of scenarios, including cross-scenario id uniqueness."""
    violations = []
    seen_ids = {}
    for idx, s in enumerate(scenarios):
        for v in validate_scenario(s):
            violations.append(Violation(v.kind, f"scenarios[{idx}].{v.path}", v.detail))
        if s.id in seen_ids:
            violations.append(Violation(
                "DuplicateId", f"scenarios[{idx}].id",
                f"id {s.id!r} already used by scenarios[{seen_ids[s.id]}]"))
        else:
            seen_ids[s.id] = idx
    return violations


def _scenario_from_dict(data) -> ClinicalScenario:
    if not isinstance(data, dict):
        raise ParseError("scenario file must contain a JSON object")
    for key in ("id", "name", "system_message", "output_instruction", "labels"):
        if key not in data:
            raise ParseError(f"missing required field {key!r}")
    labels = []
    for raw in data["labels"]:
        label = str(raw)
        upper = label.upper()
        if upper != label:
            logger.warning("normalizing label %r to uppercase %r", label, upper)
        labels.append(upper)
    examples = []
    for ex in data.get("in_context", []):
        segments = tuple(
            (str(seg["label"]).upper(), int(seg["start"]), int(seg["end"]))
            for seg in ex.get("segments", [])
        )
        examples.append(InContextExample(text=ex["text"], segments=segments))
    return ClinicalScenario(
        id=str(data["id"]),
        name=str(data["name"]),
        system_message=str(data["system_message"]),
        output_instruction=str(data["output_instruction"]),
        labels=tuple(labels),
        in_context=tuple(examples),
    )


def load_scenario(path) -> ClinicalScenario:
    """Load one scenario file, raising on malformed input or invariant violations."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    scenario = _scenario_from_dict(data)
    violations = validate_scenario(scenario)
    if violations:
        raise ValidationError(violations)
    return scenario


def scenario_to_dict(scenario: ClinicalScenario) -> dict:
    return {
        "id": scenario.id,
        "name": scenario.name,
        "system_message": scenario.system_message,
        "output_instruction": scenario.output_instruction,
        "labels": list(scenario.labels),
        "in_context": [
            {
                "text": ex.text,
                "segments": [
                    {"label": label, "start": start, "end": end}
                    for label, start, end in ex.segments
                ],
            }
            for ex in scenario.in_context
        ],
    }


def save_scenario(scenario: ClinicalScenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
