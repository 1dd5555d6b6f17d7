"""Agent registry and JSON Schemas for structured agent output.

Every prompt-based agent declares which schema its replies must satisfy;
the gateway refuses to hand anything downstream that has not validated.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError

_SPAN_FIELDS = {
    "start": {"type": "integer", "minimum": 0},
    "end": {"type": "integer", "minimum": 0},
}

SCHEMAS: dict[str, dict] = {
    "draft": {
        "type": "object",
        "required": ["body"],
        "properties": {"body": {"type": "string", "minLength": 1}},
    },
    "intents": {
        "type": "object",
        "required": ["intents"],
        "properties": {
            "intents": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["intent_type", "current_value", "alternative_values"],
                    "properties": {
                        "intent_type": {"type": "string", "minLength": 1},
                        "current_value": {"type": "string", "minLength": 1},
                        "alternative_values": {
                            "type": "array",
                            "minItems": 1,
                            "items": {"type": "string", "minLength": 1},
                        },
                    },
                },
            }
        },
    },
    "units": {
        "type": "object",
        "required": ["units"],
        "properties": {
            "units": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["label", "start", "end"],
                    "properties": {
                        "label": {"type": "string", "minLength": 1},
                        **_SPAN_FIELDS,
                    },
                },
            }
        },
    },
    "links": {
        "type": "object",
        "required": ["links"],
        "properties": {
            "links": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["unit_id", "intent_id"],
                    "properties": {
                        "unit_id": {"type": "string", "minLength": 1},
                        "intent_id": {"type": "string", "minLength": 1},
                    },
                },
            }
        },
    },
    "rewrite": {
        "type": "object",
        "required": ["replacements", "rationale_summary"],
        "properties": {
            "replacements": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["start", "end", "new_text"],
                    "properties": {
                        **_SPAN_FIELDS,
                        "new_text": {"type": "string"},
                    },
                },
            },
            "rationale_summary": {"type": "string"},
        },
    },
    "adapted_factors": {
        "type": "object",
        "required": ["entries"],
        "properties": {
            "entries": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["factor_id", "status", "note"],
                    "properties": {
                        "factor_id": {"type": "string", "minLength": 1},
                        "status": {"enum": ["kept", "transformed"]},
                        "selected_option": {"type": ["string", "null"]},
                        "elaboration": {"type": ["string", "null"]},
                        "note": {"type": "string"},
                    },
                },
            }
        },
    },
    "edit_analysis": {
        "type": "object",
        "required": ["modification_name", "rationale",
                     "receiver_description", "occasion_description"],
        "properties": {
            "modification_name": {"type": "string", "minLength": 1},
            "rationale": {"type": "string", "minLength": 1},
            "receiver_description": {"type": "string", "minLength": 1},
            "occasion_description": {"type": "string", "minLength": 1},
        },
    },
    "quickfix": {
        "type": "object",
        "required": ["start", "end", "new_text", "rationale_summary"],
        "properties": {
            **_SPAN_FIELDS,
            "new_text": {"type": "string"},
            "rationale_summary": {"type": "string"},
        },
    },
    "curated_factors": {
        "type": "object",
        "required": ["factors"],
        "properties": {
            "factors": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["factor_id", "suggested_options"],
                    "properties": {
                        "factor_id": {"type": "string", "minLength": 1},
                        "suggested_options": {
                            "type": "array",
                            "minItems": 1,
                            "items": {"type": "string", "minLength": 1},
                        },
                        "rationale": {"type": ["string", "null"]},
                    },
                },
            }
        },
    },
    "anchor_name": {
        "type": "object",
        "required": ["name"],
        "properties": {"name": {"type": "string", "minLength": 1}},
    },
}


@dataclass(frozen=True)
class AgentSpec:
    """Registration entry for one prompt-based agent."""

    name: str
    output_schema: str
    default_temperature: float


# Structure-extraction agents run at temperature 0; generation and rewrite
# agents default to a mildly creative temperature (configurable at call time).
AGENTS: dict[str, AgentSpec] = {
    spec.name: spec
    for spec in (
        AgentSpec("factor_curator", "curated_factors", 0.0),
        AgentSpec("draft_generator", "draft", 0.7),
        AgentSpec("intent_analyzer", "intents", 0.0),
        AgentSpec("unit_extractor", "units", 0.0),
        AgentSpec("unit_intent_linker", "links", 0.0),
        AgentSpec("intent_rewriter", "rewrite", 0.7),
        AgentSpec("anchor_adapter", "adapted_factors", 0.0),
        AgentSpec("edit_analyzer", "edit_analysis", 0.0),
        AgentSpec("quickfix_rewriter", "quickfix", 0.7),
        AgentSpec("anchor_namer", "anchor_name", 0.0),
    )
}


def agent_spec(name: str) -> AgentSpec:
    try:
        return AGENTS[name]
    except KeyError:
        raise ValidationError(f"unknown agent {name!r}",
                              details={"registered": sorted(AGENTS)}) from None


def schema_for(schema_id: str) -> dict:
    try:
        return SCHEMAS[schema_id]
    except KeyError:
        raise ValidationError(f"unknown output schema {schema_id!r}") from None
