#!/usr/bin/env python3
"""Regenerate the committed dinner-cancellation fixture.

Runs a fully scripted session once against canned agent responses, records
every (fingerprint, response) pair, and writes:

    fixtures/dinner_script.json      the replayable session script
    fixtures/dinner_transcript.json  the mock transcript keyed by fingerprint
    fixtures/dinner_final_body.txt   the expected final email body
    fixtures/dinner_store.json       the expected store contents after the run

Run from the repository root: python3 scripts/build_dinner_fixture.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from tonemail.catalog import load_catalog  # noqa: E402
from tonemail.gateway import RecordingGateway, ScriptedGateway  # noqa: E402
from tonemail.pipeline import AgentPipeline, SequentialIdFactory, TickClock  # noqa: E402
from tonemail.prompts import PromptLibrary  # noqa: E402
from tonemail.runner import ScriptRunner  # noqa: E402
from tonemail.service import CompositionService  # noqa: E402
from tonemail.store import ReuseStore  # noqa: E402

FIXTURE_DIR = REPO_ROOT / "fixtures"

TASK = {
    "task_description": ("Cancel Friday's dinner with a senior faculty member "
                         "I had already accepted, without damaging the relationship"),
    "recipient_hint": "senior faculty member",
}

PARTS = [
    ("Opening_Salutation",
     "Dear Professor Lee,\n\nI hope this email finds you well.\n\n"),
    ("Statement_of_Purpose",
     "I am so sorry, but I must cancel our dinner planned for this Friday.\n\n"),
    ("Justification",
     "An unavoidable family matter requires me to travel out of town that "
     "evening.\n\n"),
    ("Call_to_Action",
     "I would be glad to reschedule at a time that suits you. I hope the "
     "next invitation finds you equally well.\n\n"),
    ("Closing_Pleasantry",
     "Thank you so much for your understanding.\n\nWarm regards,\nAlex"),
]

BODY = "".join(text for _, text in PARTS)

SELECTIONS = [
    {"factor_id": "familiarity", "selected_option": "Familiar",
     "elaboration": None, "skipped": False},
    {"factor_id": "power_status",
     "selected_option": "Significant power difference",
     "elaboration": None, "skipped": False},
    {"factor_id": "relationship_needs", "selected_option": "Maintain relationship",
     "elaboration": None, "skipped": False},
    {"factor_id": "emotional_intent", "selected_option": "Express regret",
     "elaboration": None, "skipped": False},
    {"factor_id": "communication_purpose", "selected_option": "Apology",
     "elaboration": None, "skipped": False},
]

NEW_JUSTIFICATION = ("A personal emergency has come up that evening, and I am "
                     "afraid I cannot work around it.\n\n")

OLD_PLEASANTRY = "I hope this email finds you well."
NEW_PLEASANTRY = "It was wonderful to hear your keynote last month."

QUICKFIX_TARGET = "I hope the next invitation finds you equally well"
QUICKFIX_TEXT = "I look forward to the next invitation"


def spans():
    result, cursor = [], 0
    for label, text in PARTS:
        result.append((label, cursor, cursor + len(text)))
        cursor += len(text)
    return result


def scripted_responses() -> ScriptedGateway:
    gateway = ScriptedGateway()
    gateway.push("factor_curator", {"factors": [
        {"factor_id": "relationship_type", "suggested_options": ["Senior colleague"]},
        {"factor_id": "familiarity", "suggested_options": ["Familiar", "Not close"]},
        {"factor_id": "power_status",
         "suggested_options": ["Significant power difference"]},
        {"factor_id": "relationship_needs",
         "suggested_options": ["Maintain relationship"]},
        {"factor_id": "emotional_intent", "suggested_options": ["Express regret"]},
        {"factor_id": "communication_purpose", "suggested_options": ["Apology"]},
    ]})
    gateway.push("draft_generator", {"body": BODY})
    gateway.push("intent_analyzer", {"intents": [
        {"intent_type": "Opening Strategy",
         "current_value": "Apology-first, acknowledgment-focused",
         "alternative_values": ["Direct cancellation notice",
                                "Context-first explanation"]},
        {"intent_type": "Excuse Strategy",
         "current_value": "Unavoidable circumstance, legitimizing",
         "alternative_values": ["Personal emergency, brief",
                                "Detailed explanation, transparency-focused"]},
        {"intent_type": "Relationship Preservation",
         "current_value": "High priority, future-oriented",
         "alternative_values": ["Minimal acknowledgment",
                                "Extensive reassurance, status-conscious"]},
    ]})
    gateway.push("unit_extractor", {"units": [
        {"label": label, "start": start, "end": end}
        for label, start, end in spans()
    ]})
    gateway.push("unit_intent_linker", {"links": [
        {"unit_id": "unit-0001", "intent_id": "intent-0001"},
        {"unit_id": "unit-0002", "intent_id": "intent-0001"},
        {"unit_id": "unit-0003", "intent_id": "intent-0002"},
        {"unit_id": "unit-0001", "intent_id": "intent-0003"},
        {"unit_id": "unit-0003", "intent_id": "intent-0003"},
        {"unit_id": "unit-0004", "intent_id": "intent-0003"},
        {"unit_id": "unit-0005", "intent_id": "intent-0003"},
    ]})
    justification = next(s for s in spans() if s[0] == "Justification")
    gateway.push("intent_rewriter", {
        "replacements": [{"start": justification[1], "end": justification[2],
                          "new_text": NEW_JUSTIFICATION}],
        "rationale_summary": "framed the reason as a brief personal emergency",
    })
    gateway.push("edit_analyzer", {
        "modification_name": "open with a personal greeting",
        "rationale": "generic opener feels impersonal for a familiar recipient",
        "receiver_description": "senior faculty member",
        "occasion_description": "cancelling an accepted dinner",
    })
    body_after_quickfix_query = body_after_edit()
    q_start = body_after_quickfix_query.index(QUICKFIX_TARGET)
    gateway.push("quickfix_rewriter", {
        "start": q_start, "end": q_start + len(QUICKFIX_TARGET),
        "new_text": QUICKFIX_TEXT,
        "rationale_summary": "applied the personal-greeting preference",
    })
    gateway.push("anchor_namer", {"name": "Familiar Senior Academic Mentors"})
    return gateway


def body_after_intent() -> str:
    justification = next(s for s in spans() if s[0] == "Justification")
    return BODY[:justification[1]] + NEW_JUSTIFICATION + BODY[justification[2]:]


def body_after_edit() -> str:
    return body_after_intent().replace(OLD_PLEASANTRY, NEW_PLEASANTRY, 1)


def build_steps() -> list[dict]:
    edited = body_after_intent()
    edit_start = edited.index(OLD_PLEASANTRY)
    after_edit = body_after_edit()
    q_start = after_edit.index(QUICKFIX_TARGET)
    return [
        {"op": "create_session", "task": TASK},
        {"op": "submit_factors", "selections": SELECTIONS},
        {"op": "generate"},
        {"op": "apply_intent", "intent_id": "intent-0002",
         "new_value": "Personal emergency, brief"},
        {"op": "manual_edit",
         "span": [edit_start, edit_start + len(OLD_PLEASANTRY)],
         "new_text": NEW_PLEASANTRY,
         "rationale": "I replace generic openers with a personal touch"},
        {"op": "quickfix_query",
         "span": [q_start, q_start + len(QUICKFIX_TARGET)]},
        {"op": "quickfix_apply", "record_id": "record-0001",
         "span": [q_start, q_start + len(QUICKFIX_TARGET)]},
        {"op": "save_anchor", "kind": "Persona"},
        {"op": "finalize"},
    ]


def main() -> None:
    FIXTURE_DIR.mkdir(exist_ok=True)
    store_path = FIXTURE_DIR / "dinner_store.json"
    if store_path.exists():
        store_path.unlink()

    recorder = RecordingGateway(scripted_responses())
    ids = SequentialIdFactory()
    clock = TickClock()
    pipeline = AgentPipeline(recorder, PromptLibrary(), ids=ids, clock=clock)
    service = CompositionService(catalog=load_catalog(), pipeline=pipeline,
                                 store=ReuseStore(store_path), ids=ids, clock=clock)

    steps = build_steps()
    outcome = ScriptRunner(service).run(steps)
    assert outcome.final_body is not None

    (FIXTURE_DIR / "dinner_script.json").write_text(
        json.dumps({"scenario": "Declining a Professional Dinner Invitation",
                    "steps": steps}, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8", newline="\n")
    recorder.transcript.save(FIXTURE_DIR / "dinner_transcript.json")
    (FIXTURE_DIR / "dinner_final_body.txt").write_text(
        outcome.final_body, encoding="utf-8", newline="\n")

    print(f"final body: {len(outcome.final_body)} chars")
    print(f"transcript entries: {len(recorder.transcript.entries)}")
    print(f"store records: {len(service.store.list_records())}, "
          f"anchors: {len(service.store.list_anchors())}")


if __name__ == "__main__":
    main()
