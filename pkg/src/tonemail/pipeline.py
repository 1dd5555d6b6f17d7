"""The prompt-based agent pipeline.

Wraps every LLM-facing step of a composition session: base-draft
generation, the four post-generation analysis agents (intent analysis,
unit extraction, unit-intent linking, intent-driven rewriting), anchor
adaptation, edit analysis, the QuickFix rewrite path, and anchor naming.

All agent output is schema-validated by the gateway before it gets here,
then repaired or rejected against the domain invariants: segmentations are
snapped into exact partitions, link graphs are completed deterministically,
and rewrites outside their allowed spans are refused.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Optional, Protocol, Sequence
from uuid import uuid4

from .domain import (
    Anchor,
    AnchorKind,
    CommunicativeUnit,
    EditEvent,
    EmailDraft,
    FactorSelection,
    Intent,
    IntentOrigin,
    RationaleOrigin,
    Span,
    StylebookRecord,
    TaskContext,
    UnitIntentLink,
    canonical_unit_label,
    normalize_body,
    sentence_bounds,
    validate_link_graph,
    validate_unit_partition,
)
from .errors import (
    NoOpEditError,
    ScopeError,
    SchemaError,
    SegmentationError,
    ValidationError,
)
from .gateway import AgentRequest, ChatGateway, complete_structured
from .prompts import PromptLibrary
from .schemas import agent_spec


# ---------------------------------------------------------------------------
# Deterministic runtime plumbing
# ---------------------------------------------------------------------------


class IdFactory(Protocol):
    def new_id(self, kind: str) -> str: ...


class SequentialIdFactory:
    """Deterministic ids (``unit-0001``, ...) for mock and replay runs."""

    def __init__(self):
        self._counters: defaultdict[str, int] = defaultdict(int)

    def new_id(self, kind: str) -> str:
        self._counters[kind] += 1
        return f"{kind}-{self._counters[kind]:04d}"


class RandomIdFactory:
    def new_id(self, kind: str) -> str:
        return f"{kind}-{uuid4().hex[:12]}"


class Clock(Protocol):
    def now(self) -> datetime: ...


class TickClock:
    """Advances one fixed step per reading; keeps mock runs byte-identical."""

    def __init__(self, start: datetime | None = None, step_seconds: int = 1):
        self._current = start or datetime(2026, 1, 1, tzinfo=timezone.utc)
        self._step = step_seconds

    def now(self) -> datetime:
        value = self._current
        self._current = self._current + timedelta(seconds=self._step)
        return value


class SystemClock:
    def now(self) -> datetime:
        return datetime.now(timezone.utc)


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RewriteResult:
    """Scoped text replacements produced by a rewrite agent."""

    affected_unit_ids: list[str]
    replacements: list[tuple[Span, str]]
    rationale_summary: str

    @property
    def is_noop(self) -> bool:
        return not self.replacements


class AdaptationStatus(str, Enum):
    KEPT = "kept"
    TRANSFORMED = "transformed"


@dataclass(frozen=True)
class AdaptedFactorEntry:
    selection: FactorSelection
    status: AdaptationStatus
    note: str


@dataclass(frozen=True)
class AdaptedFactorSet:
    entries: list[AdaptedFactorEntry]

    def selections(self) -> list[FactorSelection]:
        return [entry.selection for entry in self.entries]


@dataclass
class ExtractionResult:
    units: list[CommunicativeUnit]
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class PipelineConfig:
    max_retries: int = 2
    alternatives_count: int = 2  # alternative values requested per intent, 1..5
    generation_temperature: float = 0.7
    rewrite_temperature: float = 0.7

    def __post_init__(self):
        if not 1 <= self.alternatives_count <= 5:
            raise ValidationError("alternatives_count must be between 1 and 5")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")


# ---------------------------------------------------------------------------
# Pure repair helpers (unit-testable without a gateway)
# ---------------------------------------------------------------------------


def repair_segmentation(spans: Sequence[tuple[str, int, int]],
                        body_length: int) -> tuple[list[tuple[str, int, int]], list[str]]:
    """Snap raw ``(label, start, end)`` spans into an exact ordered partition.

    Repair rules: spans are clamped to the body and sorted by position;
    gap text merges into the preceding unit (a leading gap into the first
    unit); overlaps are truncated at the earlier unit's end; spans left
    empty are dropped. Raises :class:`SegmentationError` when nothing
    usable remains.
    """
    if body_length <= 0:
        raise SegmentationError("cannot segment an empty body")

    warnings: list[str] = []
    clamped: list[tuple[str, int, int]] = []
    for label, start, end in spans:
        clamped_start, clamped_end = max(start, 0), min(end, body_length)
        if (clamped_start, clamped_end) != (start, end):
            warnings.append(
                f"span [{start}, {end}) of unit {label!r} clamped to the body")
        if clamped_start >= clamped_end:
            warnings.append(f"dropped empty span of unit {label!r}")
            continue
        clamped.append((label, clamped_start, clamped_end))

    if not clamped:
        raise SegmentationError("segmentation produced no usable units")

    clamped.sort(key=lambda item: (item[1], item[2]))
    repaired: list[tuple[str, int, int]] = []
    cursor = 0
    for label, start, end in clamped:
        if start > cursor:
            if repaired:
                prev_label, prev_start, _ = repaired[-1]
                repaired[-1] = (prev_label, prev_start, start)
                warnings.append(
                    f"gap [{cursor}, {start}) merged into preceding unit {prev_label!r}")
            else:
                warnings.append(f"leading gap [0, {start}) merged into unit {label!r}")
                start = 0
        elif start < cursor:
            warnings.append(
                f"overlap [{start}, {cursor}) truncated at the earlier unit's end")
            start = cursor
            if start >= end:
                warnings.append(f"dropped unit {label!r} fully covered by earlier units")
                continue
        repaired.append((label, start, end))
        cursor = end

    if not repaired:
        raise SegmentationError("segmentation collapsed during repair")
    if cursor < body_length:
        label, start, _ = repaired[-1]
        repaired[-1] = (label, start, body_length)
        warnings.append(
            f"trailing gap [{cursor}, {body_length}) merged into last unit {label!r}")
    return repaired, warnings


def complete_links(units: Sequence[CommunicativeUnit],
                   intents: Sequence[Intent],
                   raw_links: Sequence[tuple[str, str]],
                   ) -> tuple[list[UnitIntentLink], list[str]]:
    """Drop dangling links and add deterministic fallback links.

    A still-unlinked unit is linked to the first intent; a still-unlinked
    intent is linked to the unit with the lowest ``order_index``.
    """
    if not units or not intents:
        raise ValidationError("link completion needs at least one unit and one intent")
    warnings: list[str] = []
    unit_ids = {u.unit_id for u in units}
    intent_ids = {i.intent_id for i in intents}
    links: list[UnitIntentLink] = []
    seen: set[tuple[str, str]] = set()
    for unit_id, intent_id in raw_links:
        if unit_id not in unit_ids or intent_id not in intent_ids:
            warnings.append(f"dropped dangling link ({unit_id}, {intent_id})")
            continue
        key = (unit_id, intent_id)
        if key in seen:
            continue
        seen.add(key)
        links.append(UnitIntentLink(unit_id=unit_id, intent_id=intent_id))

    linked_units = {link.unit_id for link in links}
    linked_intents = {link.intent_id for link in links}
    first_intent = intents[0].intent_id
    first_unit = min(units, key=lambda u: u.order_index).unit_id

    for unit in units:
        if unit.unit_id not in linked_units:
            links.append(UnitIntentLink(unit_id=unit.unit_id, intent_id=first_intent))
            warnings.append(f"unit {unit.unit_id} had no intent; fallback-linked")
    for intent in intents:
        if intent.intent_id not in linked_intents:
            key = (first_unit, intent.intent_id)
            if key not in seen:
                links.append(UnitIntentLink(unit_id=first_unit,
                                            intent_id=intent.intent_id))
            warnings.append(f"intent {intent.intent_id} had no unit; fallback-linked")
    return links, warnings


def merged_spans(spans: Sequence[Span]) -> list[Span]:
    """Union of spans as a sorted list of disjoint intervals."""
    merged: list[list[int]] = []
    for start, end in sorted(spans):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(start, end) for start, end in merged]


def _spans_within(replacements: Sequence[tuple[Span, str]],
                  allowed: Sequence[Span]) -> bool:
    regions = merged_spans(allowed)
    for (start, end), _ in replacements:
        if not any(r_start <= start and end <= r_end for r_start, r_end in regions):
            return False
    return True


def _replacements_disjoint(replacements: Sequence[tuple[Span, str]]) -> bool:
    ordered = sorted(span for span, _ in replacements)
    for (_, prev_end), (next_start, _) in zip(ordered, ordered[1:]):
        if next_start < prev_end:
            return False
    return True


# ---------------------------------------------------------------------------
# The pipeline
# ---------------------------------------------------------------------------


class AgentPipeline:
    """Runs the registered prompt-based agents against a chat gateway."""

    def __init__(self, gateway: ChatGateway, prompts: PromptLibrary, *,
                 ids: IdFactory | None = None, clock: Clock | None = None,
                 config: PipelineConfig | None = None):
        self.gateway = gateway
        self.prompts = prompts
        self.ids = ids or RandomIdFactory()
        self.clock = clock or SystemClock()
        self.config = config or PipelineConfig()

    # -- internals ---------------------------------------------------------

    def _run(self, agent_name: str, *, temperature: float | None = None,
             **variables: str):
        spec = agent_spec(agent_name)
        request = AgentRequest(
            agent_name=agent_name,
            prompt=self.prompts.render(agent_name, **variables),
            output_schema=spec.output_schema,
            temperature_hint=spec.default_temperature if temperature is None else temperature,
            max_retries=self.config.max_retries,
        )
        return complete_structured(request, self.gateway)

    # -- drafting ----------------------------------------------------------

    def generate_draft(self, task: TaskContext, factor_block: str,
                       stylebook_hints: Optional[str] = None) -> EmailDraft:
        result = self._run(
            "draft_generator",
            temperature=self.config.generation_temperature,
            task_description=task.task_description,
            recipient_hint=task.recipient_hint or "none given",
            factor_block=factor_block or "none selected",
            stylebook_hints=stylebook_hints or "none",
        )
        return EmailDraft(
            draft_id=self.ids.new_id("draft"),
            body=normalize_body(result.value["body"]),
            revision=0,
        )

    # -- analysis ----------------------------------------------------------

    def analyze_intents(self, task: TaskContext, factor_block: str,
                        draft: EmailDraft) -> list[Intent]:
        result = self._run(
            "intent_analyzer",
            task_description=task.task_description,
            factor_block=factor_block or "none selected",
            draft_body=draft.body,
            alternatives_count=str(self.config.alternatives_count),
        )
        intents: list[Intent] = []
        for entry in result.value["intents"]:
            try:
                intents.append(Intent(
                    intent_id=self.ids.new_id("intent"),
                    intent_type=entry["intent_type"],
                    current_value=entry["current_value"],
                    alternative_values=list(entry["alternative_values"]),
                    origin=IntentOrigin.DERIVED,
                ))
            except ValidationError:
                continue  # every alternative duplicated the current value
        if not intents:
            raise SchemaError("intent analysis yielded no usable intents",
                              last_raw=result.raw, attempts=result.retry_count + 1)
        return intents

    def extract_units(self, draft: EmailDraft) -> ExtractionResult:
        result = self._run(
            "unit_extractor",
            draft_body=draft.body,
            label_vocabulary=", ".join(
                label for label in
                ("Opening_Salutation", "Statement_of_Purpose", "Justification",
                 "Call_to_Action", "Closing_Pleasantry")),
        )
        raw_spans = [
            (canonical_unit_label(entry["label"]), entry["start"], entry["end"])
            for entry in result.value["units"]
        ]
        repaired, warnings = repair_segmentation(raw_spans, len(draft.body))
        units = [
            CommunicativeUnit(
                unit_id=self.ids.new_id("unit"),
                label=label,
                start=start,
                end=end,
                order_index=index,
            )
            for index, (label, start, end) in enumerate(repaired)
        ]
        report = validate_unit_partition(units, len(draft.body))
        assert report.ok, f"repair left an invalid partition: {report.codes()}"
        return ExtractionResult(units=units, warnings=warnings)

    def link_units_intents(self, units: list[CommunicativeUnit],
                           intents: list[Intent]) -> list[UnitIntentLink]:
        units_block = "\n".join(
            f"{u.unit_id} | {u.label} | [{u.start}, {u.end})" for u in units)
        intents_block = "\n".join(
            f"{i.intent_id} | {i.intent_type} | current: {i.current_value}"
            for i in intents)
        result = self._run("unit_intent_linker",
                           units_block=units_block, intents_block=intents_block)
        raw_links = [(entry["unit_id"], entry["intent_id"])
                     for entry in result.value["links"]]

        missing = self._unlinked(units, intents, raw_links)
        if missing:
            retry = self._run(
                "unit_intent_linker",
                units_block=units_block,
                intents_block=intents_block + "\n\nStill unlinked, every one must "
                f"appear in a link: {', '.join(sorted(missing))}",
            )
            raw_links.extend((entry["unit_id"], entry["intent_id"])
                             for entry in retry.value["links"])

        links, _ = complete_links(units, intents, raw_links)
        report = validate_link_graph(units, intents, links)
        assert report.ok, f"link completion left an invalid graph: {report.codes()}"
        return links

    @staticmethod
    def _unlinked(units, intents, raw_links) -> set[str]:
        unit_ids = {u.unit_id for u in units}
        intent_ids = {i.intent_id for i in intents}
        linked_units = {u for u, i in raw_links if u in unit_ids and i in intent_ids}
        linked_intents = {i for u, i in raw_links if u in unit_ids and i in intent_ids}
        return (unit_ids - linked_units) | (intent_ids - linked_intents)

    # -- rewriting ---------------------------------------------------------

    def rewrite_for_intent(self, draft: EmailDraft,
                           units: list[CommunicativeUnit],
                           links: list[UnitIntentLink],
                           intent: Intent, new_value: str) -> RewriteResult:
        linked_unit_ids = [l.unit_id for l in links if l.intent_id == intent.intent_id]
        if not linked_unit_ids:
            raise ValidationError(
                f"intent {intent.intent_id} is not linked to any unit")
        if new_value == intent.current_value:
            return RewriteResult(affected_unit_ids=[], replacements=[],
                                 rationale_summary="value unchanged; nothing to rewrite")

        linked_units = [u for u in units if u.unit_id in set(linked_unit_ids)]
        allowed = [u.span for u in linked_units]
        units_block = "\n".join(
            f"{u.unit_id} | {u.label} | [{u.start}, {u.end}) | "
            f"{json.dumps(u.text(draft.body), ensure_ascii=False)}"
            for u in sorted(linked_units, key=lambda u: u.order_index))

        variables = dict(
            draft_body=draft.body,
            intent_type=intent.intent_type,
            old_value=intent.current_value,
            new_value=new_value,
            linked_units_block=units_block,
        )
        result = self._run("intent_rewriter",
                           temperature=self.config.rewrite_temperature, **variables)
        replacements = self._to_replacements(result.value)
        if not self._rewrite_in_scope(replacements, allowed):
            retry = self._run(
                "intent_rewriter",
                temperature=self.config.rewrite_temperature,
                **{**variables, "linked_units_block": units_block +
                   "\n\nReminder: every replacement span must lie inside the "
                   "unit spans listed above and spans must not overlap."},
            )
            replacements = self._to_replacements(retry.value)
            result = retry
            if not self._rewrite_in_scope(replacements, allowed):
                raise ScopeError(
                    "rewrite agent proposed edits outside the linked units",
                    details={"allowed": [list(span) for span in allowed],
                             "proposed": [list(span) for span, _ in replacements]},
                )
        affected = [
            u.unit_id for u in sorted(linked_units, key=lambda u: u.order_index)
            if any(self._touches(u, start, end) for (start, end), _ in replacements)
        ]
        return RewriteResult(
            affected_unit_ids=affected,
            replacements=replacements,
            rationale_summary=result.value["rationale_summary"],
        )

    @staticmethod
    def _touches(unit: CommunicativeUnit, start: int, end: int) -> bool:
        if start == end:  # pure insertion
            return unit.start <= start <= unit.end
        return start < unit.end and end > unit.start

    @staticmethod
    def _to_replacements(value: dict) -> list[tuple[Span, str]]:
        return [((entry["start"], entry["end"]), entry["new_text"])
                for entry in value["replacements"]]

    @staticmethod
    def _rewrite_in_scope(replacements, allowed) -> bool:
        return _spans_within(replacements, allowed) and \
            _replacements_disjoint(replacements)

    # -- anchors -----------------------------------------------------------

    def adapt_anchor(self, anchor: Anchor, new_task: TaskContext) -> AdaptedFactorSet:
        if new_task == anchor.source_task:
            return AdaptedFactorSet(entries=[
                AdaptedFactorEntry(selection=selection, status=AdaptationStatus.KEPT,
                                   note="identical task; configuration reused as-is")
                for selection in anchor.factor_configuration
            ])

        config_block = "\n".join(
            f"- {s.factor_id}: option={s.selected_option or 'none'}; "
            f"note={s.elaboration or 'none'}"
            for s in anchor.factor_configuration)
        result = self._run(
            "anchor_adapter",
            anchor_name=anchor.name,
            factor_configuration_block=config_block,
            source_task=anchor.source_task.task_description,
            new_task=new_task.task_description,
        )

        by_id = {s.factor_id: s for s in anchor.factor_configuration}
        returned: dict[str, AdaptedFactorEntry] = {}
        for entry in result.value["entries"]:
            factor_id = entry["factor_id"]
            if factor_id not in by_id or factor_id in returned:
                continue  # outside the anchor, or duplicated — ignore
            original = by_id[factor_id]
            status = AdaptationStatus(entry["status"])
            if status == AdaptationStatus.TRANSFORMED:
                option = entry.get("selected_option")
                elaboration = entry.get("elaboration")
                if option is None and elaboration is None:
                    status = AdaptationStatus.KEPT  # nothing actually changed
                    selection = original
                else:
                    selection = FactorSelection(factor_id=factor_id,
                                                selected_option=option,
                                                elaboration=elaboration)
            else:
                selection = original  # kept entries stay value-identical
            returned[factor_id] = AdaptedFactorEntry(
                selection=selection, status=status, note=entry["note"])

        entries = []
        for selection in anchor.factor_configuration:
            entry = returned.get(selection.factor_id)
            if entry is None:
                entry = AdaptedFactorEntry(selection=selection,
                                           status=AdaptationStatus.KEPT,
                                           note="unmodified by adaptation")
            entries.append(entry)
        return AdaptedFactorSet(entries=entries)

    def name_anchor(self, kind: AnchorKind, factor_block: str,
                    task: TaskContext) -> str:
        result = self._run(
            "anchor_namer",
            kind=kind.value,
            task_description=task.task_description,
            factor_block=factor_block or "none selected",
        )
        return result.value["name"].strip()

    # -- learning ----------------------------------------------------------

    def analyze_edit(self, event: EditEvent, receiver_summary: str,
                     occasion_summary: str) -> StylebookRecord:
        if event.original_text == event.revised_text:
            raise NoOpEditError("original and revised text are identical")
        result = self._run(
            "edit_analyzer",
            original_text=event.original_text,
            revised_text=event.revised_text,
            user_rationale=event.user_rationale or "",
            receiver_summary=receiver_summary or "unspecified",
            occasion_summary=occasion_summary or "unspecified",
        )
        user_rationale = (event.user_rationale or "").strip()
        return StylebookRecord(
            record_id=self.ids.new_id("record"),
            modification_name=result.value["modification_name"],
            original_text=event.original_text,
            revised_text=event.revised_text,
            rationale=user_rationale or result.value["rationale"],
            rationale_origin=(RationaleOrigin.USER_PROVIDED if user_rationale
                              else RationaleOrigin.AGENT_INFERRED),
            receiver_description=result.value["receiver_description"],
            occasion_description=result.value["occasion_description"],
            created_at=self.clock.now(),
        )

    # -- quickfix ----------------------------------------------------------

    def apply_quickfix(self, draft: EmailDraft, span: Span,
                       record: StylebookRecord) -> RewriteResult:
        start, end = span
        if not (0 <= start < end <= len(draft.body)):
            raise ValidationError(
                f"quickfix span [{start}, {end}) invalid for body of length "
                f"{len(draft.body)}")
        allowed = sentence_bounds(draft.body, span)
        variables = dict(
            draft_body=draft.body,
            span_start=str(start),
            span_end=str(end),
            selected_text=draft.body[start:end],
            record_name=record.modification_name,
            record_original=record.original_text,
            record_revised=record.revised_text,
            record_rationale=record.rationale,
        )
        result = self._run("quickfix_rewriter",
                           temperature=self.config.rewrite_temperature, **variables)
        replacement = self._quickfix_replacement(result.value, allowed)
        if replacement is None:
            retry = self._run(
                "quickfix_rewriter",
                temperature=self.config.rewrite_temperature,
                **{**variables, "record_rationale": variables["record_rationale"] +
                   "\n\nReminder: the replacement must stay inside "
                   f"[{allowed[0]}, {allowed[1]})."},
            )
            replacement = self._quickfix_replacement(retry.value, allowed)
            result = retry
            if replacement is None:
                raise ScopeError(
                    "quickfix agent proposed a replacement outside the selection's "
                    "sentence", details={"allowed": list(allowed)})
        rationale = result.value["rationale_summary"]
        (r_start, r_end), _ = replacement
        if r_start < start or r_end > end:
            rationale += " (extended to sentence boundaries)"
        return RewriteResult(affected_unit_ids=[], replacements=[replacement],
                             rationale_summary=rationale)

    @staticmethod
    def _quickfix_replacement(value: dict, allowed: Span) -> tuple[Span, str] | None:
        start, end = value["start"], value["end"]
        if allowed[0] <= start <= end <= allowed[1]:
            return ((start, end), value["new_text"])
        return None
