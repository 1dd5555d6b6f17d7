"""Session state machine orchestrating the composition workflow.

A session walks Created -> FactorsCurated -> FactorsSubmitted -> Drafted ->
Analyzed, loops inside Analyzed while the user refines (intent
modifications, quickfixes, manual edits), and ends at Finalized. Every
operation either performs a legal transition or raises
:class:`~tonemail.errors.StateError`; everything that happens is appended
to the session's event log, from which the summary and replay scripts are
derived.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Any, Optional

from .catalog import (
    Catalog,
    CurationResult,
    curate_factors,
    fallback_prompts,
    render_factor_context,
    validate_selections,
)
from .domain import (
    Anchor,
    AnchorKind,
    CommunicativeUnit,
    EditEvent,
    EmailDraft,
    FactorCategory,
    FactorPrompt,
    FactorSelection,
    Intent,
    QuickFixSuggestion,
    RationaleOrigin,
    Span,
    TaskContext,
    UnitIntentLink,
    apply_replacements,
    validate_link_graph,
    validate_unit_partition,
)
from .errors import (
    GatewayError,
    NotFoundError,
    SchemaError,
    SegmentationError,
    StateError,
    ValidationError,
)
from .pipeline import (
    AdaptedFactorSet,
    AgentPipeline,
    Clock,
    IdFactory,
    RandomIdFactory,
    RewriteResult,
    SystemClock,
)
from .store import ReuseStore, SimilarityQuery


class SessionState(str, Enum):
    CREATED = "Created"
    FACTORS_CURATED = "FactorsCurated"
    FACTORS_SUBMITTED = "FactorsSubmitted"
    DRAFTED = "Drafted"
    ANALYZED = "Analyzed"
    FINALIZED = "Finalized"


_STATE_ORDER = {state: index for index, state in enumerate(SessionState)}


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    at: datetime
    payload: dict[str, Any]


@dataclass
class PendingPreview:
    intent_id: str
    new_value: str
    base_revision: int
    result: RewriteResult


@dataclass
class AppliedQuickFix:
    record_id: str
    revision_before: int
    replacement_span: Span
    new_length: int
    original_text: str


@dataclass
class Session:
    session_id: str
    task: TaskContext
    state: SessionState = SessionState.CREATED
    factor_prompts: list[FactorPrompt] = field(default_factory=list)
    curation_warnings: list[str] = field(default_factory=list)
    selections: list[FactorSelection] = field(default_factory=list)
    applied_anchor: Optional[tuple[str, AdaptedFactorSet]] = None
    draft: Optional[EmailDraft] = None
    units: list[CommunicativeUnit] = field(default_factory=list)
    intents: list[Intent] = field(default_factory=list)
    links: list[UnitIntentLink] = field(default_factory=list)
    pending_quickfixes: list[QuickFixSuggestion] = field(default_factory=list)
    pending_preview: Optional[PendingPreview] = None
    last_quickfix: Optional[AppliedQuickFix] = None
    pending_rationale: dict[int, str] = field(default_factory=dict)
    event_log: list[SessionEvent] = field(default_factory=list)

    def intent_by_id(self, intent_id: str) -> Intent:
        for intent in self.intents:
            if intent.intent_id == intent_id:
                return intent
        raise NotFoundError(f"no intent with id {intent_id!r}")

    def at_least(self, state: SessionState) -> bool:
        return _STATE_ORDER[self.state] >= _STATE_ORDER[state]


@dataclass
class EditOutcome:
    session: Session
    edit_seq: int
    record_id: Optional[str]
    rationale_requested: bool


@dataclass
class QuickFixQueryResult:
    status: str  # "ok" | "no_records" | "no_matches"
    suggestions: list[QuickFixSuggestion]


@dataclass
class FinalizeResult:
    final_body: str
    summary: dict[str, Any]


def summarize_events(events: list[SessionEvent]) -> dict[str, Any]:
    """Session summary as a pure function of the event log."""
    counts = {
        "intent_previews": 0,
        "intent_modifications": 0,
        "quickfix_queries": 0,
        "quickfixes_applied": 0,
        "quickfixes_undone": 0,
        "manual_edits": 0,
        "anchors_saved": 0,
        "factors_revised_after_anchor": 0,
    }
    kind_to_counter = {
        "intent_preview": "intent_previews",
        "intent_applied": "intent_modifications",
        "quickfix_queried": "quickfix_queries",
        "quickfix_applied": "quickfixes_applied",
        "quickfix_undone": "quickfixes_undone",
        "manual_edit": "manual_edits",
        "anchor_saved": "anchors_saved",
    }
    timings: dict[str, float] = {}
    for event in events:
        counter = kind_to_counter.get(event.kind)
        if counter:
            counts[counter] += 1
        if event.kind == "factors_submitted":
            counts["factors_revised_after_anchor"] += event.payload.get(
                "anchor_revised_count") or 0
        if "seconds" in event.payload:
            stage = event.payload.get("stage", event.kind)
            timings[stage] = timings.get(stage, 0.0) + event.payload["seconds"]
    return {"counts": counts, "timings": timings, "events": len(events)}


@dataclass(frozen=True)
class ServiceConfig:
    min_factors: int = 6
    retrieval_top_k: int = 3
    retrieval_threshold: float = 0.25
    max_retries: int = 2
    stylebook_hint_count: int = 3


class CompositionService:
    """Holds the in-memory session registry and runs the whole workflow.

    Sessions are mutated under a per-session lock; the reuse store is the
    only durable state.
    """

    def __init__(self, *, catalog: Catalog, pipeline: AgentPipeline,
                 store: ReuseStore, config: ServiceConfig | None = None,
                 ids: IdFactory | None = None, clock: Clock | None = None):
        self.catalog = catalog
        self.pipeline = pipeline
        self.store = store
        self.config = config or ServiceConfig()
        self.ids = ids or RandomIdFactory()
        self.clock = clock or SystemClock()
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()

    # -- registry ------------------------------------------------------------

    def get_session(self, session_id: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"no session with id {session_id!r}")
        return session

    def _lock_for(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            lock = self._locks.get(session_id)
            if lock is None:
                raise NotFoundError(f"no session with id {session_id!r}")
            return lock

    def _log(self, session: Session, kind: str, **payload: Any) -> SessionEvent:
        event = SessionEvent(seq=len(session.event_log) + 1, kind=kind,
                             at=self.clock.now(), payload=payload)
        session.event_log.append(event)
        return event

    @staticmethod
    def _require(session: Session, *allowed: SessionState) -> None:
        if session.state not in allowed:
            raise StateError(
                f"operation not allowed in state {session.state.value}",
                details={"state": session.state.value,
                         "allowed": [state.value for state in allowed]},
            )

    # -- stage 1: context & initialization ------------------------------------

    def create_session(self, task: TaskContext) -> Session:
        session = Session(session_id=self.ids.new_id("session"), task=task)
        with self._registry_lock:
            self._sessions[session.session_id] = session
            self._locks[session.session_id] = threading.RLock()
        self._log(session, "session_created", task=task.to_dict())
        started = self.clock.now()
        try:
            curated: CurationResult = curate_factors(
                task, self.pipeline.gateway, catalog=self.catalog,
                prompts=self.pipeline.prompts, min_factors=self.config.min_factors,
                max_retries=self.config.max_retries)
        except (GatewayError, SchemaError) as exc:
            session.factor_prompts = fallback_prompts(self.catalog)
            session.curation_warnings = [
                f"curation unavailable ({exc.message}); showing the full catalog"]
            self._log(session, "curation_fallback",
                      warning=session.curation_warnings[0],
                      prompt_count=len(session.factor_prompts))
            return session
        session.factor_prompts = curated.prompts
        session.curation_warnings = curated.warnings
        session.state = SessionState.FACTORS_CURATED
        self._log(session, "factors_curated", stage="curation",
                  prompt_count=len(curated.prompts), warnings=curated.warnings,
                  seconds=(self.clock.now() - started).total_seconds())
        return session

    def apply_anchor(self, session_id: str, anchor_id: str) -> AdaptedFactorSet:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.FACTORS_CURATED)
            anchor = self.store.get_anchor(anchor_id)
            adapted = self.pipeline.adapt_anchor(anchor, session.task)
            session.selections = adapted.selections()
            session.applied_anchor = (anchor_id, adapted)
            kept = sum(1 for e in adapted.entries if e.status.value == "kept")
            self._log(session, "anchor_applied", anchor_id=anchor_id,
                      kept=kept, transformed=len(adapted.entries) - kept)
            return adapted

    # -- stage 2/3: factors, drafting, analysis --------------------------------

    def submit_factors(self, session_id: str,
                       selections: list[FactorSelection]) -> Session:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            # CREATED is allowed here only because curation may have fallen
            # back to the full catalog without reaching FactorsCurated.
            self._require(session, SessionState.CREATED,
                          SessionState.FACTORS_CURATED)
            report = validate_selections(selections, self.catalog)
            if not report.ok:
                raise ValidationError("factor selections are invalid",
                                      details={"issues": [i.message for i in report.issues]})
            anchor_revised = None
            if session.applied_anchor is not None:
                prefilled = {s.factor_id: s for s in
                             session.applied_anchor[1].selections()}
                anchor_revised = sum(
                    1 for s in selections
                    if s.factor_id in prefilled and prefilled[s.factor_id] != s)
            session.selections = list(selections)
            session.state = SessionState.FACTORS_SUBMITTED
            self._log(session, "factors_submitted",
                      selections=[s.to_dict() for s in selections],
                      anchor_revised_count=anchor_revised)
            return session

    def _stylebook_hints(self) -> Optional[str]:
        names = [record.modification_name
                 for record in self.store.list_records()[:self.config.stylebook_hint_count]]
        if not names:
            return None
        return "\n".join(f"- {name}" for name in names)

    def generate(self, session_id: str) -> Session:
        """Generate the base draft, then run the analysis stage.

        Callable again from Drafted to retry analysis after a
        SegmentationError without regenerating the draft.
        """
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.FACTORS_SUBMITTED,
                          SessionState.DRAFTED)
            factor_block = render_factor_context(session.selections, self.catalog)
            if session.state == SessionState.FACTORS_SUBMITTED:
                started = self.clock.now()
                session.draft = self.pipeline.generate_draft(
                    session.task, factor_block, self._stylebook_hints())
                session.state = SessionState.DRAFTED
                self._log(session, "draft_generated", stage="generation",
                          revision=session.draft.revision,
                          body_length=len(session.draft.body),
                          seconds=(self.clock.now() - started).total_seconds())

            started = self.clock.now()
            try:
                intents = self.pipeline.analyze_intents(
                    session.task, factor_block, session.draft)
                extraction = self.pipeline.extract_units(session.draft)
                links = self.pipeline.link_units_intents(extraction.units, intents)
            except SegmentationError:
                # Session stays Drafted; the caller may retry analysis.
                raise
            session.intents = intents
            session.units = extraction.units
            session.links = links
            session.state = SessionState.ANALYZED
            self._log(session, "analysis_completed", stage="analysis",
                      units=len(extraction.units), intents=len(intents),
                      links=len(links), warnings=extraction.warnings,
                      seconds=(self.clock.now() - started).total_seconds())
            self._check_analysis(session)
            return session

    def _check_analysis(self, session: Session) -> None:
        partition = validate_unit_partition(session.units, len(session.draft.body))
        graph = validate_link_graph(session.units, session.intents, session.links)
        assert partition.ok and graph.ok, (
            f"analysis invariants violated: {partition.codes() + graph.codes()}")

    # -- stage 4: refinement ---------------------------------------------------

    def preview_intent(self, session_id: str, intent_id: str,
                       new_value: str) -> tuple[RewriteResult, str]:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED)
            intent = session.intent_by_id(intent_id)
            result = self.pipeline.rewrite_for_intent(
                session.draft, session.units, session.links, intent, new_value)
            preview_body = apply_replacements(session.draft.body, result.replacements)
            session.pending_preview = PendingPreview(
                intent_id=intent_id, new_value=new_value,
                base_revision=session.draft.revision, result=result)
            self._log(session, "intent_preview", intent_id=intent_id,
                      new_value=new_value, noop=result.is_noop)
            return result, preview_body

    def discard_preview(self, session_id: str, intent_id: str) -> Session:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED)
            session.pending_preview = None
            self._log(session, "intent_discarded", intent_id=intent_id)
            return session

    def apply_intent(self, session_id: str, intent_id: str,
                     new_value: str) -> Session:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED)
            intent = session.intent_by_id(intent_id)

            pending = session.pending_preview
            if (pending is not None and pending.intent_id == intent_id
                    and pending.new_value == new_value
                    and pending.base_revision == session.draft.revision):
                result = pending.result
            else:
                result = self.pipeline.rewrite_for_intent(
                    session.draft, session.units, session.links, intent, new_value)
            session.pending_preview = None

            if result.is_noop:
                self._log(session, "intent_apply_noop", intent_id=intent_id,
                          new_value=new_value)
                return session

            new_body = apply_replacements(session.draft.body, result.replacements)
            session.draft = session.draft.next_revision(new_body)
            session.intents = [
                i.with_value(new_value) if i.intent_id == intent_id else i
                for i in session.intents
            ]
            self._refresh_units(session, result.replacements)
            session.last_quickfix = None
            self._log(session, "intent_applied", intent_id=intent_id,
                      new_value=new_value, revision=session.draft.revision,
                      affected_units=result.affected_unit_ids)
            self._check_analysis(session)
            return session

    def _refresh_units(self, session: Session,
                       replacements: list[tuple[Span, str]]) -> None:
        """Re-offset unit spans arithmetically, or re-extract when an edit
        crossed a unit boundary."""
        owners: dict[int, list[tuple[Span, str]]] = {}
        crossed = False
        for span, text in replacements:
            owner = None
            for unit in sorted(session.units, key=lambda u: u.order_index):
                if unit.start <= span[0] and span[1] <= unit.end:
                    owner = unit.order_index
                    break
            if owner is None:
                crossed = True
                break
            owners.setdefault(owner, []).append((span, text))

        if not crossed:
            adjusted: list[CommunicativeUnit] = []
            acc = 0
            for unit in sorted(session.units, key=lambda u: u.order_index):
                new_start = unit.start + acc
                acc += sum(len(text) - (span[1] - span[0])
                           for span, text in owners.get(unit.order_index, []))
                adjusted.append(replace(unit, start=new_start, end=unit.end + acc))
            session.units = adjusted
            return

        # Boundary crossed: re-extract on the new revision and preserve the
        # link graph by unit label identity.
        extraction = self.pipeline.extract_units(session.draft)
        old_by_label: dict[str, CommunicativeUnit] = {}
        for unit in session.units:
            old_by_label.setdefault(unit.label.lower(), unit)
        relabeled: list[CommunicativeUnit] = []
        id_map: dict[str, str] = {}
        for unit in extraction.units:
            old = old_by_label.get(unit.label.lower())
            if old is not None and old.unit_id not in id_map.values():
                id_map[unit.unit_id] = old.unit_id
                relabeled.append(replace(unit, unit_id=old.unit_id))
            else:
                relabeled.append(unit)
        kept_unit_ids = {u.unit_id for u in relabeled}
        raw_links = [(link.unit_id, link.intent_id) for link in session.links
                     if link.unit_id in kept_unit_ids]
        from .pipeline import complete_links
        links, _ = complete_links(relabeled, session.intents, raw_links)
        session.units = relabeled
        session.links = links
        self._log(session, "units_reextracted", units=len(relabeled),
                  warnings=extraction.warnings)

    # -- quickfix ---------------------------------------------------------------

    def _context_summaries(self, session: Session) -> tuple[str, str]:
        receiver_parts: list[str] = []
        occasion_parts: list[str] = []
        if session.task.recipient_hint:
            receiver_parts.append(session.task.recipient_hint)
        for selection in session.selections:
            if selection.skipped or selection.factor_id not in self.catalog:
                continue
            factor = self.catalog.get(selection.factor_id)
            value = selection.selected_option or selection.elaboration or ""
            if not value:
                continue
            line = f"{factor.name}: {value}"
            if factor.category == FactorCategory.PERSONA:
                receiver_parts.append(line)
            else:
                occasion_parts.append(line)
        receiver = "; ".join(receiver_parts) or "unspecified recipient"
        occasion = "; ".join(occasion_parts) or session.task.task_description
        return receiver, occasion

    def quickfix_query(self, session_id: str, span: Span) -> QuickFixQueryResult:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED)
            start, end = span
            if not (0 <= start < end <= len(session.draft.body)):
                raise ValidationError(f"quickfix span [{start}, {end}) is invalid")
            if not self.store.list_records():
                session.pending_quickfixes = []
                self._log(session, "quickfix_queried", span=[start, end],
                          status="no_records", surfaced=[])
                return QuickFixQueryResult(status="no_records", suggestions=[])
            receiver, occasion = self._context_summaries(session)
            query = SimilarityQuery(
                selected_text=session.draft.body[start:end],
                receiver_summary=receiver,
                occasion_summary=occasion,
                top_k=self.config.retrieval_top_k,
                threshold=self.config.retrieval_threshold,
            )
            suggestions = self.store.retrieve_quickfixes(query, target_span=span)
            session.pending_quickfixes = suggestions
            status = "ok" if suggestions else "no_matches"
            self._log(session, "quickfix_queried", span=[start, end], status=status,
                      surfaced=[s.record_id for s in suggestions])
            return QuickFixQueryResult(status=status, suggestions=suggestions)

    def apply_quickfix(self, session_id: str, record_id: str,
                       span: Span) -> Session:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED)
            record = self.store.get_record(record_id)
            result = self.pipeline.apply_quickfix(session.draft, span, record)
            (replacement_span, new_text) = result.replacements[0]
            original_text = session.draft.body[replacement_span[0]:replacement_span[1]]
            revision_before = session.draft.revision
            new_body = apply_replacements(session.draft.body, result.replacements)
            session.draft = session.draft.next_revision(new_body)
            self._refresh_units(session, result.replacements)
            self.store.bump_usage(record_id, accepted=True)
            session.last_quickfix = AppliedQuickFix(
                record_id=record_id,
                revision_before=revision_before,
                replacement_span=replacement_span,
                new_length=len(new_text),
                original_text=original_text,
            )
            session.pending_quickfixes = []
            self._log(session, "quickfix_applied", record_id=record_id,
                      span=[span[0], span[1]], revision=session.draft.revision,
                      rationale=result.rationale_summary)
            self._check_analysis(session)
            return session

    def undo_quickfix(self, session_id: str) -> Session:
        """Revert the most recent quickfix with a compensating revision and
        roll its acceptance back."""
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED)
            applied = session.last_quickfix
            if applied is None:
                raise ValidationError("no quickfix to undo")
            start = applied.replacement_span[0]
            undo_span = (start, start + applied.new_length)
            replacements = [(undo_span, applied.original_text)]
            new_body = apply_replacements(session.draft.body, replacements)
            session.draft = session.draft.next_revision(new_body)
            self._refresh_units(session, replacements)
            self.store.rollback_acceptance(applied.record_id)
            session.last_quickfix = None
            self._log(session, "quickfix_undone", record_id=applied.record_id,
                      revision=session.draft.revision)
            self._check_analysis(session)
            return session

    # -- stage 5: learning -------------------------------------------------------

    @staticmethod
    def _normalized(text: str) -> str:
        return " ".join(text.split())

    def manual_edit(self, session_id: str, span: Span, new_text: str,
                    rationale: Optional[str] = None) -> EditOutcome:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED)
            start, end = span
            event = EditEvent(
                draft_id=session.draft.draft_id,
                revision_before=session.draft.revision,
                span=span,
                original_text=session.draft.body[start:end]
                if 0 <= start <= end <= len(session.draft.body) else "",
                revised_text=new_text,
                user_rationale=rationale,
                timestamp=self.clock.now(),
            )
            event.validate_against_body(session.draft.body)

            replacements = [(span, new_text)]
            new_body = apply_replacements(session.draft.body, replacements)
            session.draft = session.draft.next_revision(new_body)
            self._refresh_units(session, replacements)
            session.last_quickfix = None

            record_id: Optional[str] = None
            rationale_requested = False
            if self._normalized(event.original_text) != self._normalized(new_text):
                receiver, occasion = self._context_summaries(session)
                record = self.pipeline.analyze_edit(event, receiver, occasion)
                self.store.save_record(record)
                record_id = record.record_id
                rationale_requested = not (rationale or "").strip()

            edit_event = self._log(
                session, "manual_edit", span=[start, end], new_text=new_text,
                rationale=rationale, revision=session.draft.revision,
                record_id=record_id, rationale_requested=rationale_requested)
            if record_id and rationale_requested:
                session.pending_rationale[edit_event.seq] = record_id
            self._check_analysis(session)
            return EditOutcome(session=session, edit_seq=edit_event.seq,
                               record_id=record_id,
                               rationale_requested=rationale_requested)

    def attach_rationale(self, session_id: str, edit_seq: int,
                         rationale: str) -> str:
        """Late answer to the rationale prompt; upgrades the learned record."""
        if not rationale or not rationale.strip():
            raise ValidationError("rationale must be non-empty")
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            record_id = session.pending_rationale.pop(edit_seq, None)
            if record_id is None:
                raise NotFoundError(
                    f"no rationale pending for edit event {edit_seq}")
            record = self.store.get_record(record_id)
            self.store.update_record(replace(
                record, rationale=rationale.strip(),
                rationale_origin=RationaleOrigin.USER_PROVIDED))
            self._log(session, "rationale_attached", edit_seq=edit_seq,
                      record_id=record_id, rationale=rationale.strip())
            return record_id

    def save_anchor_from_session(self, session_id: str, kind: AnchorKind,
                                 name_override: Optional[str] = None) -> Anchor:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED, SessionState.FINALIZED)
            configuration = [s for s in session.selections if not s.skipped]
            if not configuration:
                raise ValidationError("cannot save an anchor without factor selections")
            if name_override and name_override.strip():
                name = name_override.strip()
            else:
                factor_block = render_factor_context(configuration, self.catalog)
                name = self.pipeline.name_anchor(kind, factor_block, session.task)
            anchor = Anchor(
                anchor_id=self.ids.new_id("anchor"),
                kind=kind,
                name=name,
                factor_configuration=configuration,
                source_task=session.task,
                created_at=self.clock.now(),
            )
            self.store.save_anchor(anchor)
            self._log(session, "anchor_saved", anchor_id=anchor.anchor_id,
                      name=name, anchor_kind=kind.value,
                      name_overridden=bool(name_override))
            return anchor

    # -- finalize -----------------------------------------------------------------

    def finalize(self, session_id: str) -> FinalizeResult:
        with self._lock_for(session_id):
            session = self.get_session(session_id)
            self._require(session, SessionState.ANALYZED)
            session.state = SessionState.FINALIZED
            self._log(session, "finalized", revision=session.draft.revision)
            return FinalizeResult(final_body=session.draft.body,
                                  summary=summarize_events(session.event_log))

    def session_summary(self, session_id: str) -> dict[str, Any]:
        return summarize_events(self.get_session(session_id).event_log)
