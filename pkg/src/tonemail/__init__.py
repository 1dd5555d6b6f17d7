"""Tone-aware email composition engine.

Structured factor exploration before drafting, communicative-unit
segmentation with editable intents after drafting, and adaptive reuse of
successful strategies through saved anchors and a learned stylebook.
"""

__version__ = "0.1.0"

from .domain import (  # noqa: F401
    Anchor,
    AnchorKind,
    CommunicativeUnit,
    EditEvent,
    EmailDraft,
    FactorCategory,
    FactorDefinition,
    FactorPrompt,
    FactorSelection,
    Intent,
    IntentOrigin,
    QuickFixSuggestion,
    RationaleOrigin,
    StylebookRecord,
    TaskContext,
    UnitIntentLink,
    validate_link_graph,
    validate_unit_partition,
)
from .errors import ToneMailError  # noqa: F401
