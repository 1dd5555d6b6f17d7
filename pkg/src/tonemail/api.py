"""HTTP JSON API over the composition service.

Error responses are structured ``{code, message, details}``: 4xx for caller
errors (400 validation, 404 missing, 409 illegal state), 502 when the LLM
gateway or an agent fails, 500 for storage faults.
"""

from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .catalog import Catalog
from .domain import AnchorKind, FactorSelection, TaskContext
from .errors import (
    GatewayError,
    NoOpEditError,
    NotFoundError,
    SchemaError,
    ScopeError,
    SegmentationError,
    StateError,
    StorageError,
    ToneMailError,
    ValidationError,
)
from .service import CompositionService, Session

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (ValidationError, 400),
    (NoOpEditError, 400),
    (NotFoundError, 404),
    (StateError, 409),
    (GatewayError, 502),
    (SchemaError, 502),
    (ScopeError, 502),
    (SegmentationError, 502),
    (StorageError, 500),
]


def _status_for(error: ToneMailError) -> int:
    for error_type, status in _STATUS_BY_ERROR:
        if isinstance(error, error_type):
            return status
    return 500


# -- request bodies ----------------------------------------------------------


class CreateSessionBody(BaseModel):
    task_description: str
    recipient_hint: Optional[str] = None
    session_locale: Optional[str] = None


class SelectionBody(BaseModel):
    factor_id: str
    selected_option: Optional[str] = None
    elaboration: Optional[str] = None
    skipped: bool = False

    def to_domain(self) -> FactorSelection:
        return FactorSelection(factor_id=self.factor_id,
                               selected_option=self.selected_option,
                               elaboration=self.elaboration,
                               skipped=self.skipped)


class SubmitFactorsBody(BaseModel):
    selections: list[SelectionBody]


class IntentChangeBody(BaseModel):
    new_value: str


class SpanBody(BaseModel):
    start: int = Field(ge=0)
    end: int = Field(ge=0)


class QuickfixApplyBody(SpanBody):
    record_id: str


class EditBody(SpanBody):
    new_text: str
    rationale: Optional[str] = None


class RationaleBody(BaseModel):
    rationale: str


class SaveAnchorBody(BaseModel):
    kind: str
    name_override: Optional[str] = None


class RenameAnchorBody(BaseModel):
    name: str


# -- views --------------------------------------------------------------------


def session_view(session: Session, catalog: Catalog) -> dict[str, Any]:
    prompts = []
    for prompt in session.factor_prompts:
        factor = catalog.get(prompt.factor_id)
        prompts.append({
            "factor_id": prompt.factor_id,
            "name": factor.name,
            "category": factor.category.value,
            "description": factor.description,
            "suggested_options": prompt.suggested_options,
            "rationale": prompt.rationale,
        })
    applied_anchor = None
    if session.applied_anchor is not None:
        anchor_id, adapted = session.applied_anchor
        applied_anchor = {
            "anchor_id": anchor_id,
            "entries": [
                {"selection": entry.selection.to_dict(),
                 "status": entry.status.value,
                 "note": entry.note}
                for entry in adapted.entries
            ],
        }
    draft = None
    if session.draft is not None:
        draft = {
            "draft_id": session.draft.draft_id,
            "body": session.draft.body,
            "revision": session.draft.revision,
            "parent_revision": session.draft.parent_revision,
        }
    return {
        "session_id": session.session_id,
        "state": session.state.value,
        "task": session.task.to_dict(),
        "factor_prompts": prompts,
        "curation_warnings": session.curation_warnings,
        "selections": [s.to_dict() for s in session.selections],
        "applied_anchor": applied_anchor,
        "draft": draft,
        "units": [
            {"unit_id": u.unit_id, "label": u.label, "start": u.start,
             "end": u.end, "order_index": u.order_index}
            for u in sorted(session.units, key=lambda u: u.order_index)
        ],
        "intents": [
            {"intent_id": i.intent_id, "intent_type": i.intent_type,
             "current_value": i.current_value,
             "alternative_values": list(i.alternative_values),
             "origin": i.origin.value, "rendered": i.render()}
            for i in session.intents
        ],
        "links": [{"unit_id": l.unit_id, "intent_id": l.intent_id}
                  for l in session.links],
    }


def create_app(service: CompositionService,
               static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="tonemail", version="0.1.0")
    catalog = service.catalog

    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/app", StaticFiles(directory=static_dir, html=True),
                  name="app")

    @app.exception_handler(ToneMailError)
    async def tonemail_error_handler(_: Request, error: ToneMailError):
        return JSONResponse(
            status_code=_status_for(error),
            content={"code": error.code, "message": error.message,
                     "details": error.details},
        )

    @app.exception_handler(RequestValidationError)
    async def request_validation_handler(_: Request, error: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "validation", "message": "invalid request body",
                     "details": {"errors": error.errors()}},
        )

    # -- sessions -----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = service.create_session(TaskContext(
            task_description=body.task_description,
            recipient_hint=body.recipient_hint,
            session_locale=body.session_locale,
        ))
        return session_view(session, catalog)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_view(service.get_session(session_id), catalog)

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str):
        session = service.get_session(session_id)
        return {"events": [
            {"seq": e.seq, "kind": e.kind, "at": e.at.isoformat(),
             "payload": e.payload}
            for e in session.event_log
        ]}

    @app.post("/sessions/{session_id}/anchor/{anchor_id}")
    def apply_anchor(session_id: str, anchor_id: str):
        service.apply_anchor(session_id, anchor_id)
        return session_view(service.get_session(session_id), catalog)

    @app.post("/sessions/{session_id}/factors")
    def submit_factors(session_id: str, body: SubmitFactorsBody):
        session = service.submit_factors(
            session_id, [s.to_domain() for s in body.selections])
        return session_view(session, catalog)

    @app.post("/sessions/{session_id}/generate")
    def generate(session_id: str):
        return session_view(service.generate(session_id), catalog)

    # -- intents ------------------------------------------------------------

    @app.post("/sessions/{session_id}/intents/{intent_id}/preview")
    def preview_intent(session_id: str, intent_id: str, body: IntentChangeBody):
        result, preview_body = service.preview_intent(session_id, intent_id,
                                                      body.new_value)
        return {
            "noop": result.is_noop,
            "preview_body": preview_body,
            "replacements": [
                {"start": span[0], "end": span[1], "new_text": text}
                for span, text in result.replacements
            ],
            "affected_unit_ids": result.affected_unit_ids,
            "rationale_summary": result.rationale_summary,
        }

    @app.post("/sessions/{session_id}/intents/{intent_id}/apply")
    def apply_intent(session_id: str, intent_id: str, body: IntentChangeBody):
        session = service.apply_intent(session_id, intent_id, body.new_value)
        return session_view(session, catalog)

    @app.post("/sessions/{session_id}/intents/{intent_id}/discard")
    def discard_preview(session_id: str, intent_id: str):
        session = service.discard_preview(session_id, intent_id)
        return session_view(session, catalog)

    # -- quickfix -------------------------------------------------------------

    @app.post("/sessions/{session_id}/quickfix/query")
    def quickfix_query(session_id: str, body: SpanBody):
        result = service.quickfix_query(session_id, (body.start, body.end))
        records = {record.record_id: record for record in service.store.list_records()}
        return {
            "status": result.status,
            "suggestions": [
                {**s.to_dict(),
                 "modification_name": records[s.record_id].modification_name
                 if s.record_id in records else None}
                for s in result.suggestions
            ],
        }

    @app.post("/sessions/{session_id}/quickfix/apply")
    def quickfix_apply(session_id: str, body: QuickfixApplyBody):
        session = service.apply_quickfix(session_id, body.record_id,
                                         (body.start, body.end))
        return session_view(session, catalog)

    @app.post("/sessions/{session_id}/quickfix/undo")
    def quickfix_undo(session_id: str):
        return session_view(service.undo_quickfix(session_id), catalog)

    # -- edits ----------------------------------------------------------------

    @app.post("/sessions/{session_id}/edits")
    def manual_edit(session_id: str, body: EditBody):
        outcome = service.manual_edit(session_id, (body.start, body.end),
                                      body.new_text, body.rationale)
        view = session_view(outcome.session, catalog)
        view["edit"] = {
            "edit_seq": outcome.edit_seq,
            "record_id": outcome.record_id,
            "rationale_requested": outcome.rationale_requested,
        }
        return view

    @app.post("/sessions/{session_id}/edits/{edit_seq}/rationale")
    def attach_rationale(session_id: str, edit_seq: int, body: RationaleBody):
        record_id = service.attach_rationale(session_id, edit_seq, body.rationale)
        return {"record_id": record_id}

    # -- anchors (session + global) --------------------------------------------

    @app.post("/sessions/{session_id}/anchors", status_code=201)
    def save_anchor(session_id: str, body: SaveAnchorBody):
        try:
            kind = AnchorKind(body.kind)
        except ValueError:
            raise ValidationError(
                f"kind must be one of {[k.value for k in AnchorKind]}") from None
        anchor = service.save_anchor_from_session(session_id, kind,
                                                  body.name_override)
        return anchor.to_dict()

    @app.post("/sessions/{session_id}/finalize")
    def finalize(session_id: str):
        result = service.finalize(session_id)
        return {"final_body": result.final_body, "summary": result.summary}

    @app.get("/anchors")
    def list_anchors():
        return {"anchors": [a.to_dict() for a in service.store.list_anchors()]}

    @app.get("/anchors/{anchor_id}")
    def get_anchor(anchor_id: str):
        return service.store.get_anchor(anchor_id).to_dict()

    @app.patch("/anchors/{anchor_id}")
    def rename_anchor(anchor_id: str, body: RenameAnchorBody):
        return service.store.rename_anchor(anchor_id, body.name).to_dict()

    @app.delete("/anchors/{anchor_id}")
    def delete_anchor(anchor_id: str):
        existed = service.store.delete_anchor(anchor_id)
        return {"deleted": existed, "found": existed}

    @app.get("/stylebook")
    def list_records():
        return {"records": [r.to_dict() for r in service.store.list_records()]}

    @app.delete("/stylebook/{record_id}")
    def delete_record(record_id: str):
        existed = service.store.delete_record(record_id)
        return {"deleted": existed, "found": existed}

    return app
