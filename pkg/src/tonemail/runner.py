"""Script runner: executes an ordered list of API-equivalent steps.

Scripts use the same vocabulary as the session event log, so a recorded
session can be replayed as a script. A script drives exactly one session;
the first step must be ``create_session``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .domain import AnchorKind, FactorSelection, TaskContext
from .errors import ValidationError
from .service import CompositionService, FinalizeResult, Session, SessionEvent


@dataclass
class RunOutcome:
    session: Session
    final_body: Optional[str] = None
    summary: Optional[dict[str, Any]] = None
    step_results: list[dict[str, Any]] = field(default_factory=list)


def load_script(path: str | Path) -> list[dict[str, Any]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    steps = data["steps"] if isinstance(data, dict) else data
    if not isinstance(steps, list) or not steps:
        raise ValidationError("script must contain a non-empty list of steps")
    return steps


class ScriptRunner:
    """Applies script steps to a service, mirroring the HTTP surface."""

    def __init__(self, service: CompositionService):
        self.service = service

    def run(self, steps: list[dict[str, Any]]) -> RunOutcome:
        session: Session | None = None
        outcome = RunOutcome(session=None)  # type: ignore[arg-type]
        last_suggestions = []
        for index, step in enumerate(steps):
            op = step.get("op")
            if op is None:
                raise ValidationError(f"step {index} has no op")
            if op == "create_session":
                session = self.service.create_session(
                    TaskContext.from_dict(step["task"]))
                outcome.session = session
                outcome.step_results.append({"op": op, "session_id": session.session_id,
                                             "state": session.state.value})
                continue
            if session is None:
                raise ValidationError("script must start with create_session")

            if op == "apply_anchor":
                adapted = self.service.apply_anchor(session.session_id,
                                                    step["anchor_id"])
                outcome.step_results.append({
                    "op": op,
                    "kept": sum(1 for e in adapted.entries if e.status.value == "kept"),
                    "transformed": sum(1 for e in adapted.entries
                                       if e.status.value == "transformed"),
                })
            elif op == "submit_factors":
                selections = [FactorSelection.from_dict(s)
                              for s in step["selections"]]
                self.service.submit_factors(session.session_id, selections)
                outcome.step_results.append({"op": op, "count": len(selections)})
            elif op == "generate":
                self.service.generate(session.session_id)
                outcome.step_results.append({
                    "op": op, "revision": session.draft.revision,
                    "units": len(session.units), "intents": len(session.intents)})
            elif op == "preview_intent":
                result, preview = self.service.preview_intent(
                    session.session_id, step["intent_id"], step["new_value"])
                outcome.step_results.append({"op": op, "noop": result.is_noop,
                                             "preview_length": len(preview)})
            elif op == "discard_preview":
                self.service.discard_preview(session.session_id, step["intent_id"])
                outcome.step_results.append({"op": op})
            elif op == "apply_intent":
                self.service.apply_intent(session.session_id,
                                          step["intent_id"], step["new_value"])
                outcome.step_results.append({"op": op,
                                             "revision": session.draft.revision})
            elif op == "quickfix_query":
                result = self.service.quickfix_query(session.session_id,
                                                     tuple(step["span"]))
                last_suggestions = result.suggestions
                outcome.step_results.append({
                    "op": op, "status": result.status,
                    "records": [s.record_id for s in result.suggestions]})
            elif op == "quickfix_apply":
                if "record_id" in step:
                    record_id = step["record_id"]
                elif last_suggestions:
                    record_id = last_suggestions[
                        step.get("suggestion_index", 0)].record_id
                else:
                    raise ValidationError(
                        "quickfix_apply needs record_id or a prior quickfix_query")
                self.service.apply_quickfix(session.session_id, record_id,
                                            tuple(step["span"]))
                outcome.step_results.append({"op": op, "record_id": record_id,
                                             "revision": session.draft.revision})
            elif op == "quickfix_undo":
                self.service.undo_quickfix(session.session_id)
                outcome.step_results.append({"op": op,
                                             "revision": session.draft.revision})
            elif op == "manual_edit":
                edit = self.service.manual_edit(
                    session.session_id, tuple(step["span"]), step["new_text"],
                    step.get("rationale"))
                outcome.step_results.append({
                    "op": op, "edit_seq": edit.edit_seq,
                    "record_id": edit.record_id,
                    "rationale_requested": edit.rationale_requested})
            elif op == "attach_rationale":
                record_id = self.service.attach_rationale(
                    session.session_id, step["edit_seq"], step["rationale"])
                outcome.step_results.append({"op": op, "record_id": record_id})
            elif op == "save_anchor":
                anchor = self.service.save_anchor_from_session(
                    session.session_id, AnchorKind(step["kind"]),
                    step.get("name_override"))
                outcome.step_results.append({"op": op, "anchor_id": anchor.anchor_id,
                                             "name": anchor.name})
            elif op == "finalize":
                result: FinalizeResult = self.service.finalize(session.session_id)
                outcome.final_body = result.final_body
                outcome.summary = result.summary
                outcome.step_results.append({"op": op,
                                             "events": result.summary["events"]})
            else:
                raise ValidationError(f"unknown script op {op!r}")
        if outcome.session is None:
            raise ValidationError("script never created a session")
        return outcome


def script_from_event_log(events: list[SessionEvent]) -> list[dict[str, Any]]:
    """Rebuild a replayable script from a session's event log.

    Replaying it against the same mock transcript (with fresh deterministic
    ids) reconstructs the same final body.
    """
    steps: list[dict[str, Any]] = []
    for event in events:
        kind, payload = event.kind, event.payload
        if kind == "session_created":
            steps.append({"op": "create_session", "task": payload["task"]})
        elif kind == "anchor_applied":
            steps.append({"op": "apply_anchor", "anchor_id": payload["anchor_id"]})
        elif kind == "factors_submitted":
            steps.append({"op": "submit_factors",
                          "selections": payload["selections"]})
        elif kind == "draft_generated":
            steps.append({"op": "generate"})
        elif kind == "intent_preview":
            steps.append({"op": "preview_intent", "intent_id": payload["intent_id"],
                          "new_value": payload["new_value"]})
        elif kind == "intent_discarded":
            steps.append({"op": "discard_preview",
                          "intent_id": payload["intent_id"]})
        elif kind == "intent_applied":
            steps.append({"op": "apply_intent", "intent_id": payload["intent_id"],
                          "new_value": payload["new_value"]})
        elif kind == "quickfix_queried":
            steps.append({"op": "quickfix_query", "span": payload["span"]})
        elif kind == "quickfix_applied":
            steps.append({"op": "quickfix_apply", "record_id": payload["record_id"],
                          "span": payload["span"]})
        elif kind == "quickfix_undone":
            steps.append({"op": "quickfix_undo"})
        elif kind == "manual_edit":
            steps.append({"op": "manual_edit", "span": payload["span"],
                          "new_text": payload["new_text"],
                          "rationale": payload.get("rationale")})
        elif kind == "rationale_attached":
            steps.append({"op": "attach_rationale", "edit_seq": payload["edit_seq"],
                          "rationale": payload.get("rationale", "")})
        elif kind == "anchor_saved":
            steps.append({"op": "save_anchor", "kind": payload["anchor_kind"],
                          "name_override": payload["name"]
                          if payload.get("name_overridden") else None})
        elif kind == "finalized":
            steps.append({"op": "finalize"})
        # curation, analysis, fallback, noop, and re-extraction events are
        # side effects of other steps and are not replayed directly.
    return steps
