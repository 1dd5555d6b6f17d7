"""Factor catalog: the 14-factor tone taxonomy and its operations.

The catalog ships as a versioned JSON data file (8 Persona factors followed
by 6 Situation factors); deployments may point at an extended file, but the
baseline entries are frozen and pinned by tests.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .domain import (
    FactorCategory,
    FactorDefinition,
    FactorPrompt,
    FactorSelection,
    TaskContext,
    ValidationReport,
)
from .errors import ConfigError, ValidationError
from .gateway import AgentRequest, ChatGateway, complete_structured
from .prompts import PromptLibrary

logger = logging.getLogger(__name__)

PERSONA_FACTOR_NAMES = (
    "Relationship Type",
    "Familiarity",
    "Power/Status",
    "Gender Dynamics",
    "Personality Traits",
    "Relationship Needs",
    "Age",
    "Cultural Context",
)

SITUATION_FACTOR_NAMES = (
    "Emotional Intent",
    "Competing Goals",
    "Promptness",
    "Communication Purpose",
    "Occasion",
    "Avoid Negative Consequence",
)


@dataclass(frozen=True)
class Catalog:
    factors: list[FactorDefinition]
    version: int
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index: dict[str, int] = {}
        for position, factor in enumerate(self.factors):
            if factor.factor_id in index:
                raise ValidationError(f"duplicate factor_id {factor.factor_id!r} in catalog")
            index[factor.factor_id] = position
        object.__setattr__(self, "_index", index)

    def __contains__(self, factor_id: str) -> bool:
        return factor_id in self._index

    def get(self, factor_id: str) -> FactorDefinition:
        try:
            return self.factors[self._index[factor_id]]
        except KeyError:
            raise ValidationError(f"unknown factor_id {factor_id!r}") from None

    def position(self, factor_id: str) -> int:
        return self._index[factor_id]

    def sort_key(self, factor_id: str) -> tuple[int, int]:
        """Persona before Situation, catalog order within each category."""
        factor = self.get(factor_id)
        return (0 if factor.category == FactorCategory.PERSONA else 1,
                self._index[factor_id])


def default_catalog_path() -> Path:
    return Path(str(resources.files("tonemail").joinpath("data/factor_catalog.json")))


def load_catalog(path: str | Path | None = None) -> Catalog:
    catalog_path = Path(path) if path else default_catalog_path()
    try:
        data = json.loads(catalog_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read catalog file {catalog_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"catalog file {catalog_path} is not valid JSON: {exc}") from exc
    factors = [
        FactorDefinition(
            factor_id=entry["factor_id"],
            category=FactorCategory(entry["category"]),
            name=entry["name"],
            description=entry["description"],
            source_options=list(entry["source_options"]),
        )
        for entry in data["factors"]
    ]
    return Catalog(factors=factors, version=int(data["version"]))


def verify_baseline(catalog: Catalog) -> ValidationReport:
    """Check the frozen baseline: 8 Persona + 6 Situation factors, in order."""
    report = ValidationReport()
    persona = [f.name for f in catalog.factors if f.category == FactorCategory.PERSONA]
    situation = [f.name for f in catalog.factors if f.category == FactorCategory.SITUATION]
    if tuple(persona) != PERSONA_FACTOR_NAMES:
        report.add("baseline_persona", "Persona factors differ from the baseline",
                   expected=list(PERSONA_FACTOR_NAMES), actual=persona)
    if tuple(situation) != SITUATION_FACTOR_NAMES:
        report.add("baseline_situation", "Situation factors differ from the baseline",
                   expected=list(SITUATION_FACTOR_NAMES), actual=situation)
    for factor in catalog.factors:
        if not factor.source_options:
            report.add("no_options", f"factor {factor.factor_id} has no source options",
                       factor_id=factor.factor_id)
    return report


def list_factors(catalog: Catalog,
                 category_filter: Optional[FactorCategory] = None) -> list[FactorDefinition]:
    if category_filter is None:
        return list(catalog.factors)
    return [f for f in catalog.factors if f.category == category_filter]


# ---------------------------------------------------------------------------
# Curation
# ---------------------------------------------------------------------------


@dataclass
class CurationResult:
    prompts: list[FactorPrompt]
    warnings: list[str] = field(default_factory=list)


def fallback_prompts(catalog: Catalog) -> list[FactorPrompt]:
    """Offline fallback: the full catalog with source options as suggestions."""
    return [
        FactorPrompt(factor_id=f.factor_id, suggested_options=list(f.source_options))
        for f in catalog.factors
    ]


def _catalog_block(catalog: Catalog) -> str:
    return "\n".join(
        f"- {f.factor_id} | {f.category.value} | {f.name} | {f.description} | "
        f"{', '.join(f.source_options)}"
        for f in catalog.factors
    )


def curate_factors(task: TaskContext, gateway: ChatGateway, *,
                   catalog: Catalog, prompts: PromptLibrary,
                   min_factors: int = 6, max_retries: int = 2) -> CurationResult:
    """Ask the curation agent for a task-relevant factor subset.

    Agent output is validated against the catalog: unknown or duplicate
    factor_ids are dropped with a warning, ordering is normalized to
    Persona-before-Situation in catalog order, and the result is topped up
    from the catalog if the agent returned fewer than ``min_factors``.
    """
    prompt = prompts.render(
        "factor_curator",
        task_description=task.task_description,
        recipient_hint=task.recipient_hint or "none given",
        factor_catalog=_catalog_block(catalog),
        min_factors=str(min_factors),
    )
    request = AgentRequest(
        agent_name="factor_curator",
        prompt=prompt,
        output_schema="curated_factors",
        temperature_hint=0.0,
        max_retries=max_retries,
    )
    result = complete_structured(request, gateway)

    warnings: list[str] = []
    curated: list[FactorPrompt] = []
    seen: set[str] = set()
    for entry in result.value["factors"]:
        factor_id = entry["factor_id"]
        if factor_id not in catalog:
            warnings.append(f"curation agent returned unknown factor_id {factor_id!r}; dropped")
            continue
        if factor_id in seen:
            warnings.append(f"curation agent repeated factor_id {factor_id!r}; dropped duplicate")
            continue
        seen.add(factor_id)
        curated.append(FactorPrompt(
            factor_id=factor_id,
            suggested_options=list(entry["suggested_options"]),
            rationale=entry.get("rationale"),
        ))

    if len(curated) < min_factors:
        for factor in catalog.factors:
            if len(curated) >= min_factors:
                break
            if factor.factor_id in seen:
                continue
            seen.add(factor.factor_id)
            curated.append(FactorPrompt(
                factor_id=factor.factor_id,
                suggested_options=list(factor.source_options),
            ))
        warnings.append("curation returned fewer factors than the minimum; "
                        "topped up from the catalog")

    curated.sort(key=lambda p: catalog.sort_key(p.factor_id))
    for warning in warnings:
        logger.warning("curate_factors: %s", warning)
    return CurationResult(prompts=curated, warnings=warnings)


# ---------------------------------------------------------------------------
# Selection validation and rendering
# ---------------------------------------------------------------------------


def validate_selections(selections: list[FactorSelection],
                        catalog: Catalog) -> ValidationReport:
    report = ValidationReport()
    seen: set[str] = set()
    for selection in selections:
        if selection.factor_id not in catalog:
            report.add("unknown_factor", f"unknown factor_id {selection.factor_id!r}",
                       factor_id=selection.factor_id)
        if selection.factor_id in seen:
            report.add("duplicate_factor",
                       f"factor_id {selection.factor_id!r} appears more than once",
                       factor_id=selection.factor_id)
        seen.add(selection.factor_id)
        for problem in selection.invariant_issues():
            report.add("invalid_selection", f"{selection.factor_id}: {problem}",
                       factor_id=selection.factor_id)
    return report


def render_factor_context(selections: list[FactorSelection], catalog: Catalog) -> str:
    """Render non-skipped selections into a deterministic prompt block.

    One line per factor in catalog order:
    ``<FactorName>: <option>; note: <elaboration>`` with absent parts
    omitted. Equal selection sets always produce byte-equal output.
    """
    report = validate_selections(selections, catalog)
    if not report.ok:
        raise ValidationError("selections failed validation",
                              details={"issues": report.codes()})
    ordered = sorted(
        (s for s in selections if not s.skipped),
        key=lambda s: catalog.position(s.factor_id),
    )
    lines = []
    for selection in ordered:
        parts = []
        if selection.selected_option is not None:
            parts.append(selection.selected_option)
        if selection.elaboration is not None:
            parts.append(f"note: {selection.elaboration}")
        lines.append(f"{catalog.get(selection.factor_id).name}: " + "; ".join(parts))
    return "\n".join(lines)
