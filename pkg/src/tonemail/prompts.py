"""Versioned prompt-template library.

Templates live as plain-text files in a directory with a ``manifest.json``
mapping agent names to files and versions. Rendering substitutes
``{placeholder}`` tokens for provided variables and leaves everything else
(including literal JSON braces in the instructions) untouched.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

from .errors import ConfigError


def render_template(template: str, **variables: str) -> str:
    result = template
    for key, value in variables.items():
        result = result.replace("{" + key + "}", value)
    return result


def default_template_dir() -> Path:
    return Path(str(resources.files("tonemail").joinpath("data/prompt_templates")))


class PromptLibrary:
    """Loads and renders the prompt templates for all registered agents."""

    def __init__(self, template_dir: str | Path | None = None):
        self.template_dir = Path(template_dir) if template_dir else default_template_dir()
        manifest_path = self.template_dir / "manifest.json"
        if not manifest_path.is_file():
            raise ConfigError(f"prompt manifest not found at {manifest_path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        self.manifest_version: int = manifest.get("version", 0)
        self._templates: dict[str, str] = {}
        self._versions: dict[str, int] = {}
        for agent_name, entry in manifest["templates"].items():
            path = self.template_dir / entry["file"]
            if not path.is_file():
                raise ConfigError(f"prompt template missing: {path}")
            self._templates[agent_name] = path.read_text(encoding="utf-8")
            self._versions[agent_name] = entry["version"]

    def agent_names(self) -> list[str]:
        return sorted(self._templates)

    def template(self, agent_name: str) -> str:
        try:
            return self._templates[agent_name]
        except KeyError:
            raise ConfigError(f"no prompt template for agent {agent_name!r}") from None

    def version(self, agent_name: str) -> int:
        self.template(agent_name)
        return self._versions[agent_name]

    def content_hash(self, agent_name: str) -> str:
        """sha256 of the raw template text; pinned by tests to catch drift."""
        return hashlib.sha256(self.template(agent_name).encode("utf-8")).hexdigest()

    def render(self, agent_name: str, **variables: str) -> str:
        return render_template(self.template(agent_name), **variables)
