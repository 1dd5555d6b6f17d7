"""Shared test utilities: deterministic fake gateways and service wiring."""

from __future__ import annotations

import hashlib
import json
import re
from datetime import datetime, timezone
from pathlib import Path

from tonemail.catalog import load_catalog
from tonemail.domain import CommunicativeUnit, Intent, StylebookRecord, RationaleOrigin
from tonemail.gateway import ScriptedGateway
from tonemail.pipeline import AgentPipeline, PipelineConfig, SequentialIdFactory, TickClock
from tonemail.prompts import PromptLibrary
from tonemail.service import CompositionService, ServiceConfig
from tonemail.store import ReuseStore


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


_BODY_BLOCK = re.compile(r"---\n(.*)\n---", re.DOTALL)
_UNIT_LINE = re.compile(r"^(unit-\S+) \| (.+?) \| \[(\d+), (\d+)\)", re.MULTILINE)
_INTENT_LINE = re.compile(r"^(intent-\S+) \| ", re.MULTILINE)
_SELECTION = re.compile(r"Selection: \[(\d+), (\d+)\)")
_FACTOR_LINE = re.compile(r"^- (\w+) \| ", re.MULTILINE)
_CONFIG_LINE = re.compile(r"^- (\w+): option=", re.MULTILINE)


class SyntheticGateway:
    """Produces schema-valid responses for any prompt, deterministically.

    Content is derived from a hash of the prompt, so identical requests get
    identical replies; structure is parsed back out of the prompt so spans
    and ids always refer to real units/intents.
    """

    def __init__(self):
        self.calls: list[str] = []

    def complete(self, agent_name: str, prompt: str, *, temperature: float = 0.0) -> str:
        self.calls.append(agent_name)
        handler = getattr(self, f"_{agent_name}")
        return json.dumps(handler(prompt, _digest(prompt)), ensure_ascii=False)

    @staticmethod
    def _factor_curator(prompt: str, h: str) -> dict:
        factor_ids = _FACTOR_LINE.findall(prompt)[:6]
        return {"factors": [
            {"factor_id": factor_id,
             "suggested_options": [f"Way {h[:4]}", f"Way {h[4:8]}"],
             "rationale": None}
            for factor_id in factor_ids
        ]}

    @staticmethod
    def _draft_generator(prompt: str, h: str) -> dict:
        body = (f"Dear colleague,\n\nI am writing about point {h[:8]}. "
                f"The details are {h[8:16]} and {h[16:24]}.\n\n"
                f"Best regards,\nA. Sender")
        return {"body": body}

    @staticmethod
    def _intent_analyzer(prompt: str, h: str) -> dict:
        return {"intents": [
            {"intent_type": "Opening Strategy",
             "current_value": f"warm-{h[:6]}",
             "alternative_values": [f"direct-{h[6:12]}", f"brief-{h[12:18]}"]},
            {"intent_type": "Detail Level",
             "current_value": f"full-{h[18:24]}",
             "alternative_values": [f"minimal-{h[24:30]}"]},
        ]}

    @staticmethod
    def _unit_extractor(prompt: str, h: str) -> dict:
        body = _BODY_BLOCK.search(prompt).group(1)
        third = max(len(body) // 3, 1)
        cuts = [0, third, min(2 * third, len(body) - 1), len(body)]
        labels = ["Opening_Salutation", "Justification", "Closing_Pleasantry"]
        units = []
        for index in range(3):
            if cuts[index] < cuts[index + 1]:
                units.append({"label": labels[index],
                              "start": cuts[index], "end": cuts[index + 1]})
        return {"units": units}

    @staticmethod
    def _unit_intent_linker(prompt: str, h: str) -> dict:
        unit_ids = [match[0] for match in _UNIT_LINE.findall(prompt)]
        intent_ids = _INTENT_LINE.findall(prompt)
        links = [{"unit_id": unit_id, "intent_id": intent_ids[0]}
                 for unit_id in unit_ids]
        links += [{"unit_id": unit_ids[0], "intent_id": intent_id}
                  for intent_id in intent_ids[1:]]
        return {"links": links}

    @staticmethod
    def _intent_rewriter(prompt: str, h: str) -> dict:
        match = _UNIT_LINE.search(prompt.split("Allowed units", 1)[1])
        start, end = int(match.group(3)), int(match.group(4))
        return {"replacements": [{"start": start, "end": end,
                                  "new_text": f"Rewritten passage {h[:10]}. "}],
                "rationale_summary": f"changed per new value ({h[:6]})"}

    @staticmethod
    def _anchor_adapter(prompt: str, h: str) -> dict:
        factor_ids = _CONFIG_LINE.findall(prompt)
        return {"entries": [
            {"factor_id": factor_id, "status": "kept",
             "selected_option": None, "elaboration": None,
             "note": "context matches"}
            for factor_id in factor_ids
        ]}

    @staticmethod
    def _edit_analyzer(prompt: str, h: str) -> dict:
        return {"modification_name": f"adjust phrasing {h[:6]}",
                "rationale": f"prefers pattern {h[6:12]}",
                "receiver_description": "a regular correspondent",
                "occasion_description": "a routine message"}

    @staticmethod
    def _quickfix_rewriter(prompt: str, h: str) -> dict:
        start, end = map(int, _SELECTION.search(prompt).groups())
        return {"start": start, "end": end,
                "new_text": f"tightened {h[:8]}",
                "rationale_summary": "applied learned pattern"}

    @staticmethod
    def _anchor_namer(prompt: str, h: str) -> dict:
        return {"name": f"Saved Strategy {h[:6].upper()}"}


def build_service(tmp_path: Path, gateway, **overrides) -> CompositionService:
    """Service wired with deterministic ids/clock and a temp store."""
    catalog = load_catalog()
    prompts = PromptLibrary()
    ids = SequentialIdFactory()
    clock = TickClock()
    pipeline = AgentPipeline(gateway, prompts, ids=ids, clock=clock,
                             config=overrides.pop("pipeline_config", PipelineConfig()))
    store = overrides.pop("store", None) or ReuseStore(tmp_path / "store.json")
    config = overrides.pop("service_config", ServiceConfig())
    return CompositionService(catalog=catalog, pipeline=pipeline, store=store,
                              config=config, ids=ids, clock=clock)


# ---------------------------------------------------------------------------
# A hand-authored dinner-cancellation flow for scripted-gateway tests:
# five units, three intents, a many-to-many link graph.
# ---------------------------------------------------------------------------

DINNER_TASK = {
    "task_description": ("Cancel Friday's dinner with a senior faculty member "
                         "I had already accepted, without damaging the relationship"),
    "recipient_hint": "senior faculty member",
}

DINNER_PARTS = [
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

DINNER_BODY = "".join(text for _, text in DINNER_PARTS)


def dinner_spans() -> list[tuple[str, int, int]]:
    spans, cursor = [], 0
    for label, text in DINNER_PARTS:
        spans.append((label, cursor, cursor + len(text)))
        cursor += len(text)
    return spans


DINNER_CURATION = {"factors": [
    {"factor_id": "relationship_type", "suggested_options": ["Senior colleague"]},
    {"factor_id": "familiarity", "suggested_options": ["Familiar", "Not close"]},
    {"factor_id": "power_status",
     "suggested_options": ["Significant power difference"]},
    {"factor_id": "relationship_needs", "suggested_options": ["Maintain relationship"]},
    {"factor_id": "emotional_intent", "suggested_options": ["Express regret"]},
    {"factor_id": "communication_purpose", "suggested_options": ["Apology"]},
]}

DINNER_SELECTIONS = [
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

DINNER_INTENTS = {"intents": [
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
]}

def dinner_links(intent_start: int = 1, unit_start: int = 1) -> dict:
    """Link graph response; ids follow the SequentialIdFactory counters."""
    def unit(n):
        return f"unit-{unit_start + n:04d}"

    def intent(n):
        return f"intent-{intent_start + n:04d}"

    pairs = [(unit(0), intent(0)), (unit(1), intent(0)),
             (unit(2), intent(1)),
             (unit(0), intent(2)), (unit(2), intent(2)),
             (unit(3), intent(2)), (unit(4), intent(2))]
    return {"links": [{"unit_id": u, "intent_id": i} for u, i in pairs]}


DINNER_LINKS = dinner_links()


def dinner_extraction() -> dict:
    return {"units": [{"label": label, "start": start, "end": end}
                      for label, start, end in dinner_spans()]}


def dinner_gateway() -> ScriptedGateway:
    """Gateway preloaded for create -> factors -> generate on the dinner flow."""
    gateway = ScriptedGateway()
    gateway.push("factor_curator", DINNER_CURATION)
    gateway.push("draft_generator", {"body": DINNER_BODY})
    gateway.push("intent_analyzer", DINNER_INTENTS)
    gateway.push("unit_extractor", dinner_extraction())
    gateway.push("unit_intent_linker", DINNER_LINKS)
    return gateway


def make_unit(unit_id: str, start: int, end: int, order_index: int,
              label: str = "Segment") -> CommunicativeUnit:
    return CommunicativeUnit(unit_id=unit_id, label=label, start=start,
                             end=end, order_index=order_index)


def make_intent(intent_id: str, intent_type: str = "Tone",
                current: str = "warm", alternatives=("direct",)) -> Intent:
    return Intent(intent_id=intent_id, intent_type=intent_type,
                  current_value=current, alternative_values=list(alternatives))


def make_record(record_id: str, original: str, revised: str, *,
                name: str = "tighten phrasing", rationale: str = "prefers brevity",
                receiver: str = "a colleague", occasion: str = "status update",
                created_at: datetime | None = None,
                usage: int = 0, accepted: int = 0) -> StylebookRecord:
    return StylebookRecord(
        record_id=record_id,
        modification_name=name,
        original_text=original,
        revised_text=revised,
        rationale=rationale,
        rationale_origin=RationaleOrigin.AGENT_INFERRED,
        receiver_description=receiver,
        occasion_description=occasion,
        created_at=created_at or datetime(2026, 1, 1, tzinfo=timezone.utc),
        usage_count=usage,
        acceptance_count=accepted,
    )
