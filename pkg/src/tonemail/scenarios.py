"""Demo scenario library: named tone-sensitive writing tasks shipped as
fixtures, each materializable as a ready-to-run script."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Any

from .errors import NotFoundError


@dataclass(frozen=True)
class Scenario:
    name: str
    category: str
    task_description: str
    recipient_hint: str


def _load_all() -> list[Scenario]:
    raw = resources.files("tonemail").joinpath("data/scenarios.json").read_text("utf-8")
    return [Scenario(**entry) for entry in json.loads(raw)["scenarios"]]


_SCENARIOS: list[Scenario] | None = None


def list_scenarios() -> list[Scenario]:
    global _SCENARIOS
    if _SCENARIOS is None:
        _SCENARIOS = _load_all()
    return list(_SCENARIOS)


def get_scenario(name: str) -> Scenario:
    for scenario in list_scenarios():
        if scenario.name == name:
            return scenario
    raise NotFoundError(
        f"unknown scenario {name!r}",
        details={"available": [s.name for s in list_scenarios()]},
    )


def default_script(scenario: Scenario) -> dict[str, Any]:
    """A minimal runnable script for the scenario: generate and finalize.

    Edit the selections list (or insert refinement steps) before running;
    an empty selection list is valid and lets the generator work from the
    task alone.
    """
    return {
        "scenario": scenario.name,
        "steps": [
            {
                "op": "create_session",
                "task": {
                    "task_description": scenario.task_description,
                    "recipient_hint": scenario.recipient_hint,
                },
            },
            {"op": "submit_factors", "selections": []},
            {"op": "generate"},
            {"op": "finalize"},
        ],
    }
