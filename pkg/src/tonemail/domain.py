"""Core domain types and validators shared by every other module.

Everything here is a pure value type: no I/O, no clocks, no network.
Spans are half-open character ranges ``[start, end)`` into a draft body
whose line endings have been normalized to ``"\\n"`` (see
:func:`normalize_body`), so offsets mean the same thing in every
component.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Any, Iterable, Optional, Sequence

from .errors import ValidationError

Span = tuple[int, int]


def normalize_body(text: str) -> str:
    """Normalize line endings to a single newline character."""
    return text.replace("\r\n", "\n").replace("\r", "\n")


class FactorCategory(str, Enum):
    PERSONA = "Persona"
    SITUATION = "Situation"


class AnchorKind(str, Enum):
    PERSONA = "Persona"
    SITUATION = "Situation"


class IntentOrigin(str, Enum):
    DERIVED = "derived"
    USER_MODIFIED = "user_modified"


class RationaleOrigin(str, Enum):
    USER_PROVIDED = "user_provided"
    AGENT_INFERRED = "agent_inferred"


# ---------------------------------------------------------------------------
# Validation reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    message: str
    details: dict[str, Any] = field(default_factory=dict)


@dataclass
class ValidationReport:
    """Report-style validation result: empty means everything checked out."""

    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, code: str, message: str, **details: Any) -> None:
        self.issues.append(ValidationIssue(code, message, dict(details)))

    def codes(self) -> list[str]:
        return [issue.code for issue in self.issues]

    def __bool__(self) -> bool:  # truthy == clean, mirrors `if report:` guards
        return self.ok


# ---------------------------------------------------------------------------
# Task and factor types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaskContext:
    """The user's plain statement of the email's core purpose."""

    task_description: str
    recipient_hint: Optional[str] = None
    session_locale: Optional[str] = None

    def __post_init__(self):
        if not self.task_description or not self.task_description.strip():
            raise ValidationError("task_description must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_description": self.task_description,
            "recipient_hint": self.recipient_hint,
            "session_locale": self.session_locale,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TaskContext":
        return cls(
            task_description=data["task_description"],
            recipient_hint=data.get("recipient_hint"),
            session_locale=data.get("session_locale"),
        )


@dataclass(frozen=True)
class FactorDefinition:
    """One catalog factor: a dimension that shapes tone selection."""

    factor_id: str
    category: FactorCategory
    name: str
    description: str
    source_options: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.factor_id:
            raise ValidationError("factor_id must be non-empty")
        if not self.name:
            raise ValidationError("factor name must be non-empty")


@dataclass(frozen=True)
class FactorPrompt:
    """A curated, task-specific presentation of one catalog factor."""

    factor_id: str
    suggested_options: list[str]
    rationale: Optional[str] = None

    def __post_init__(self):
        if not self.suggested_options:
            raise ValidationError(
                f"factor prompt {self.factor_id!r} needs at least one suggested option"
            )


@dataclass(frozen=True)
class FactorSelection:
    """A user's answer for one factor: structured option, free text, or skip.

    Deliberately lenient at construction so report-style validators can
    describe bad incoming data instead of blowing up; use
    :meth:`invariant_issues` to check the skip/content rules.
    """

    factor_id: str
    selected_option: Optional[str] = None
    elaboration: Optional[str] = None
    skipped: bool = False

    def invariant_issues(self) -> list[str]:
        problems = []
        if self.skipped and (self.selected_option is not None or self.elaboration is not None):
            problems.append("skipped selection must not carry an option or elaboration")
        if not self.skipped and self.selected_option is None and self.elaboration is None:
            problems.append("non-skipped selection needs an option or an elaboration")
        return problems

    def to_dict(self) -> dict[str, Any]:
        return {
            "factor_id": self.factor_id,
            "selected_option": self.selected_option,
            "elaboration": self.elaboration,
            "skipped": self.skipped,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FactorSelection":
        return cls(
            factor_id=data["factor_id"],
            selected_option=data.get("selected_option"),
            elaboration=data.get("elaboration"),
            skipped=bool(data.get("skipped", False)),
        )


# ---------------------------------------------------------------------------
# Draft, units, intents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmailDraft:
    draft_id: str
    body: str
    revision: int = 0
    parent_revision: Optional[int] = None

    def __post_init__(self):
        if not self.body:
            raise ValidationError("draft body must be non-empty")
        if self.revision < 0:
            raise ValidationError("revision must be >= 0")
        if self.revision > 0 and self.parent_revision is None:
            raise ValidationError("revisions > 0 must record their parent_revision")
        if self.parent_revision is not None and self.parent_revision != self.revision - 1:
            raise ValidationError("revisions are linear: parent_revision must be revision - 1")

    def next_revision(self, new_body: str) -> "EmailDraft":
        """Produce the successor revision with the given body."""
        return EmailDraft(
            draft_id=self.draft_id,
            body=new_body,
            revision=self.revision + 1,
            parent_revision=self.revision,
        )


@dataclass(frozen=True)
class CommunicativeUnit:
    """A labeled, contiguous span of the draft serving one function.

    Span validity is checked by :func:`validate_unit_partition`, not here,
    so repair logic can inspect malformed agent output.
    """

    unit_id: str
    label: str
    start: int
    end: int
    order_index: int

    @property
    def span(self) -> Span:
        return (self.start, self.end)

    def text(self, body: str) -> str:
        return body[self.start:self.end]


#: Recommended unit vocabulary; extractor output is matched case-insensitively
#: against these, but unknown labels are allowed.
RECOMMENDED_UNIT_LABELS = (
    "Opening_Salutation",
    "Statement_of_Purpose",
    "Justification",
    "Call_to_Action",
    "Closing_Pleasantry",
)


def canonical_unit_label(label: str) -> str:
    """Map a free-text label onto the recommended vocabulary when it matches."""
    folded = label.strip().replace(" ", "_").lower()
    for known in RECOMMENDED_UNIT_LABELS:
        if known.lower() == folded:
            return known
    return label.strip()


@dataclass(frozen=True)
class Intent:
    """An editable [type, value] writing instruction.

    Alternatives are deduplicated and never contain the current value;
    construction fails if nothing remains.
    """

    intent_id: str
    intent_type: str
    current_value: str
    alternative_values: list[str]
    origin: IntentOrigin = IntentOrigin.DERIVED

    def __post_init__(self):
        cleaned: list[str] = []
        for value in self.alternative_values:
            if value != self.current_value and value not in cleaned:
                cleaned.append(value)
        object.__setattr__(self, "alternative_values", cleaned)
        if not cleaned:
            raise ValidationError(
                f"intent {self.intent_type!r} needs at least one alternative value"
            )

    def render(self) -> str:
        """Render as the bracketed fragment shown in the editor chips."""
        return f"[{self.intent_type}, {self.current_value}]"

    def with_value(self, new_value: str) -> "Intent":
        """Switch to ``new_value``; the old value joins the alternatives."""
        if new_value == self.current_value:
            return self
        alternatives = [v for v in self.alternative_values if v != new_value]
        alternatives.append(self.current_value)
        return replace(
            self,
            current_value=new_value,
            alternative_values=alternatives,
            origin=IntentOrigin.USER_MODIFIED,
        )


@dataclass(frozen=True)
class UnitIntentLink:
    unit_id: str
    intent_id: str


# ---------------------------------------------------------------------------
# Reuse artifacts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Anchor:
    """A saved, named factor configuration plus its source task."""

    anchor_id: str
    kind: AnchorKind
    name: str
    factor_configuration: list[FactorSelection]
    source_task: TaskContext
    created_at: datetime

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise ValidationError("anchor name must be non-empty")
        seen: set[str] = set()
        for selection in self.factor_configuration:
            if selection.factor_id in seen:
                raise ValidationError(
                    f"anchor has duplicate factor_id {selection.factor_id!r}"
                )
            seen.add(selection.factor_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "anchor_id": self.anchor_id,
            "kind": self.kind.value,
            "name": self.name,
            "factor_configuration": [s.to_dict() for s in self.factor_configuration],
            "source_task": self.source_task.to_dict(),
            "created_at": self.created_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Anchor":
        return cls(
            anchor_id=data["anchor_id"],
            kind=AnchorKind(data["kind"]),
            name=data["name"],
            factor_configuration=[
                FactorSelection.from_dict(s) for s in data["factor_configuration"]
            ],
            source_task=TaskContext.from_dict(data["source_task"]),
            created_at=datetime.fromisoformat(data["created_at"]),
        )


@dataclass(frozen=True)
class StylebookRecord:
    """One learned edit pattern, retrievable later as a QuickFix."""

    record_id: str
    modification_name: str
    original_text: str
    revised_text: str
    rationale: str
    rationale_origin: RationaleOrigin
    receiver_description: str
    occasion_description: str
    created_at: datetime
    usage_count: int = 0
    acceptance_count: int = 0

    def __post_init__(self):
        for name in ("modification_name", "original_text", "revised_text",
                     "rationale", "receiver_description", "occasion_description"):
            if not getattr(self, name):
                raise ValidationError(f"stylebook record field {name} must be non-empty")
        if self.original_text == self.revised_text:
            raise ValidationError("stylebook record must change the text")
        if self.acceptance_count > self.usage_count:
            raise ValidationError("acceptance_count cannot exceed usage_count")
        if self.usage_count < 0 or self.acceptance_count < 0:
            raise ValidationError("usage counters cannot be negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "modification_name": self.modification_name,
            "original_text": self.original_text,
            "revised_text": self.revised_text,
            "rationale": self.rationale,
            "rationale_origin": self.rationale_origin.value,
            "receiver_description": self.receiver_description,
            "occasion_description": self.occasion_description,
            "created_at": self.created_at.isoformat(),
            "usage_count": self.usage_count,
            "acceptance_count": self.acceptance_count,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StylebookRecord":
        return cls(
            record_id=data["record_id"],
            modification_name=data["modification_name"],
            original_text=data["original_text"],
            revised_text=data["revised_text"],
            rationale=data["rationale"],
            rationale_origin=RationaleOrigin(data["rationale_origin"]),
            receiver_description=data["receiver_description"],
            occasion_description=data["occasion_description"],
            created_at=datetime.fromisoformat(data["created_at"]),
            usage_count=int(data.get("usage_count", 0)),
            acceptance_count=int(data.get("acceptance_count", 0)),
        )


@dataclass(frozen=True)
class EditEvent:
    """A manual edit captured from the editor."""

    draft_id: str
    revision_before: int
    span: Span
    original_text: str
    revised_text: str
    user_rationale: Optional[str] = None
    timestamp: Optional[datetime] = None

    def validate_against_body(self, body: str) -> None:
        start, end = self.span
        if not (0 <= start <= end <= len(body)):
            raise ValidationError(
                f"edit span [{start}, {end}) out of bounds for body of length {len(body)}"
            )
        if body[start:end] != self.original_text:
            raise ValidationError("edit original_text does not match the body slice")


@dataclass(frozen=True)
class QuickFixSuggestion:
    record_id: str
    target_span: Span
    similarity_score: float
    proposed_text: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "target_span": list(self.target_span),
            "similarity_score": self.similarity_score,
            "proposed_text": self.proposed_text,
        }


# ---------------------------------------------------------------------------
# Validators
# ---------------------------------------------------------------------------


def validate_unit_partition(units: Sequence[CommunicativeUnit],
                            body_length: int) -> ValidationReport:
    """Check that unit spans form an ordered exact partition of the body.

    The report lists every gap, overlap, out-of-bounds span, empty span,
    and ordering violation; it is empty iff the spans, ordered by
    ``order_index``, exactly tile ``[0, body_length)``.
    """
    report = ValidationReport()

    usable: list[CommunicativeUnit] = []
    for unit in units:
        if unit.start >= unit.end:
            report.add("empty_span", f"unit {unit.unit_id} has empty span "
                       f"[{unit.start}, {unit.end})", unit_id=unit.unit_id)
            continue
        if unit.start < 0 or unit.end > body_length:
            report.add("out_of_bounds",
                       f"unit {unit.unit_id} span [{unit.start}, {unit.end}) "
                       f"exceeds body of length {body_length}",
                       unit_id=unit.unit_id, span=[unit.start, unit.end])
        usable.append(unit)

    ordered = sorted(usable, key=lambda u: u.order_index)
    starts = [u.start for u in ordered]
    if starts != sorted(starts):
        report.add("out_of_order", "unit spans are not ordered by order_index")

    # Boundary sweep over the clamped spans: count coverage between events.
    events: list[tuple[int, int]] = []
    for unit in usable:
        start = max(unit.start, 0)
        end = min(unit.end, body_length)
        if start < end:
            events.append((start, 1))
            events.append((end, -1))
    boundaries = sorted({0, body_length, *(pos for pos, _ in events)})
    deltas: dict[int, int] = {}
    for pos, delta in events:
        deltas[pos] = deltas.get(pos, 0) + delta

    depth = 0
    for left, right in zip(boundaries, boundaries[1:]):
        depth += deltas.get(left, 0)
        if left >= body_length or right <= 0:
            continue
        if depth == 0:
            report.add("gap", f"no unit covers [{left}, {right})", span=[left, right])
        elif depth >= 2:
            report.add("overlap", f"{depth} units cover [{left}, {right})",
                       span=[left, right], depth=depth)
    return report


def validate_link_graph(units: Sequence[CommunicativeUnit],
                        intents: Sequence[Intent],
                        links: Iterable[UnitIntentLink]) -> ValidationReport:
    """Check the many-to-many unit/intent graph for dangling or missing links."""
    report = ValidationReport()
    unit_ids = {u.unit_id for u in units}
    intent_ids = {i.intent_id for i in intents}
    linked_units: set[str] = set()
    linked_intents: set[str] = set()

    for link in links:
        dangling = False
        if link.unit_id not in unit_ids:
            report.add("dangling_endpoint",
                       f"link references unknown unit {link.unit_id!r}",
                       unit_id=link.unit_id, intent_id=link.intent_id)
            dangling = True
        if link.intent_id not in intent_ids:
            report.add("dangling_endpoint",
                       f"link references unknown intent {link.intent_id!r}",
                       unit_id=link.unit_id, intent_id=link.intent_id)
            dangling = True
        if not dangling:
            linked_units.add(link.unit_id)
            linked_intents.add(link.intent_id)

    for unit in units:
        if unit.unit_id not in linked_units:
            report.add("unlinked_unit", f"unit {unit.unit_id} has no intent",
                       unit_id=unit.unit_id)
    for intent in intents:
        if intent.intent_id not in linked_intents:
            report.add("unlinked_intent", f"intent {intent.intent_id} has no unit",
                       intent_id=intent.intent_id)
    return report


def apply_replacements(body: str, replacements: Sequence[tuple[Span, str]]) -> str:
    """Apply non-overlapping span replacements to a body.

    Spans refer to the *input* body; replacements are applied right-to-left
    so earlier offsets stay valid.
    """
    ordered = sorted(replacements, key=lambda item: item[0][0])
    cursor = -1
    for (start, end), _ in ordered:
        if not (0 <= start <= end <= len(body)):
            raise ValidationError(f"replacement span [{start}, {end}) out of bounds")
        if start < cursor:
            raise ValidationError("replacement spans overlap")
        cursor = end
    result = body
    for (start, end), new_text in reversed(ordered):
        result = result[:start] + new_text + result[end:]
    return result


_SENTENCE_BREAK = re.compile(r"[.!?\n]")


def sentence_bounds(body: str, span: Span) -> Span:
    """Expand a span to the enclosing sentence boundaries.

    Sentences end at ``.``, ``!``, ``?`` or a newline; the terminator stays
    with the sentence it closes.
    """
    start, end = span
    left = 0
    for match in _SENTENCE_BREAK.finditer(body, 0, start):
        left = match.end()
    right = len(body)
    tail = _SENTENCE_BREAK.search(body, max(end - 1, start))
    if tail is not None:
        right = tail.end()
    return (min(left, start), max(right, end))
