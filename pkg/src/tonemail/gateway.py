"""LLM gateway: structured completion with bounded retries, plus the
deterministic mock used for offline runs.

Fingerprint contract (stable across platforms and releases): an agent
request is identified by ``sha256(agent_name + "\\n" + normalized_prompt)``
where the normalized prompt has line endings collapsed to ``"\\n"`` and
surrounding whitespace stripped. Mock transcripts are keyed by this
fingerprint, never by call order.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

import httpx
import jsonschema

from .domain import normalize_body
from .errors import ConfigError, GatewayError, SchemaError, StorageError, ValidationError
from .schemas import agent_spec, schema_for


class ChatGateway(Protocol):
    def complete(self, agent_name: str, prompt: str, *, temperature: float = 0.0) -> str:
        """Return the raw model reply for one prompt."""
        ...


def request_fingerprint(agent_name: str, prompt: str) -> str:
    normalized = normalize_body(prompt).strip()
    digest = hashlib.sha256()
    digest.update(agent_name.encode("utf-8"))
    digest.update(b"\n")
    digest.update(normalized.encode("utf-8"))
    return digest.hexdigest()


@dataclass(frozen=True)
class AgentRequest:
    """One structured-output request to a registered agent."""

    agent_name: str
    prompt: str
    output_schema: str
    temperature_hint: float = 0.0
    max_retries: int = 2

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        agent_spec(self.agent_name)  # unknown agents are rejected here
        schema_for(self.output_schema)


@dataclass(frozen=True)
class StructuredResult:
    value: Any
    retry_count: int
    raw: str


_FENCE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```\s*$", re.DOTALL)


def _parse_json_reply(raw: str) -> Any:
    text = raw.strip()
    fenced = _FENCE.match(text)
    if fenced:
        text = fenced.group(1).strip()
    return json.loads(text)


def complete_structured(request: AgentRequest, gateway: ChatGateway) -> StructuredResult:
    """Run one agent request, re-prompting on invalid output.

    Schema-invalid replies trigger a re-prompt with the validation error
    appended, up to ``max_retries`` extra attempts; after that a
    :class:`SchemaError` carries the last raw output.
    """
    schema = schema_for(request.output_schema)
    prompt = request.prompt
    raw = ""
    last_error = ""
    for attempt in range(request.max_retries + 1):
        raw = gateway.complete(request.agent_name, prompt,
                               temperature=request.temperature_hint)
        try:
            value = _parse_json_reply(raw)
            jsonschema.validate(value, schema)
            return StructuredResult(value=value, retry_count=attempt, raw=raw)
        except json.JSONDecodeError as exc:
            last_error = f"reply is not valid JSON: {exc}"
        except jsonschema.ValidationError as exc:
            last_error = f"reply does not match the required schema: {exc.message}"
        prompt = (
            f"{prompt}\n\nYour previous reply was invalid: {last_error}\n"
            "Respond again with JSON that matches the required schema exactly."
        )
    raise SchemaError(
        f"agent {request.agent_name!r} output still invalid after "
        f"{request.max_retries + 1} attempts: {last_error}",
        last_raw=raw,
        attempts=request.max_retries + 1,
    )


# ---------------------------------------------------------------------------
# Mock transcript
# ---------------------------------------------------------------------------


@dataclass
class MockTranscript:
    """Fingerprint-keyed canned responses for fully offline runs.

    On disk this is a JSON document ``{"version": 1, "entries": [...]}``;
    each entry carries a ``fingerprint`` plus either ``response`` (a JSON
    value, serialized compactly when served) or ``response_text`` (verbatim
    raw text, used for deliberately malformed fixtures).
    """

    entries: dict[str, str] = field(default_factory=dict)

    def add(self, fingerprint: str, response: Any, *, raw: bool = False) -> None:
        if fingerprint in self.entries:
            raise ValidationError(f"duplicate transcript fingerprint {fingerprint}")
        if raw:
            self.entries[fingerprint] = str(response)
        else:
            self.entries[fingerprint] = json.dumps(response, ensure_ascii=False,
                                                   sort_keys=True)

    def lookup(self, fingerprint: str) -> str | None:
        return self.entries.get(fingerprint)

    @classmethod
    def load(cls, path: str | Path) -> "MockTranscript":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise StorageError(f"cannot read transcript {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise StorageError(f"transcript {path} is not valid JSON: {exc}") from exc
        if data.get("version") != 1:
            raise StorageError(f"unsupported transcript version {data.get('version')!r}")
        transcript = cls()
        for entry in data["entries"]:
            fingerprint = entry["fingerprint"]
            if fingerprint in transcript.entries:
                raise StorageError(f"duplicate fingerprint in transcript: {fingerprint}")
            if "response_text" in entry:
                transcript.entries[fingerprint] = entry["response_text"]
            else:
                transcript.entries[fingerprint] = json.dumps(
                    entry["response"], ensure_ascii=False, sort_keys=True)
        return transcript

    def save(self, path: str | Path) -> None:
        entries = [
            {"fingerprint": fingerprint, "response_text": response}
            for fingerprint, response in sorted(self.entries.items())
        ]
        payload = json.dumps({"version": 1, "entries": entries},
                             ensure_ascii=False, indent=2, sort_keys=True)
        Path(path).write_text(payload + "\n", encoding="utf-8", newline="\n")


class MockGateway:
    """Serves canned responses by request fingerprint; never touches the network."""

    def __init__(self, transcript: MockTranscript):
        self.transcript = transcript
        self.calls: list[tuple[str, str]] = []

    def complete(self, agent_name: str, prompt: str, *, temperature: float = 0.0) -> str:
        fingerprint = request_fingerprint(agent_name, prompt)
        self.calls.append((agent_name, fingerprint))
        response = self.transcript.lookup(fingerprint)
        if response is None:
            raise GatewayError(
                f"no transcript entry for agent {agent_name!r}",
                details={"fingerprint": fingerprint},
            )
        return response


class ScriptedGateway:
    """Per-agent FIFO of responses; handy for building fixtures and tests."""

    def __init__(self, responses: dict[str, list[Any]] | None = None):
        self._queues: dict[str, list[str]] = {}
        for agent_name, values in (responses or {}).items():
            for value in values:
                self.push(agent_name, value)
        self.calls: list[tuple[str, str]] = []

    def push(self, agent_name: str, response: Any, *, raw: bool = False) -> None:
        text = str(response) if raw else json.dumps(response, ensure_ascii=False,
                                                    sort_keys=True)
        self._queues.setdefault(agent_name, []).append(text)

    def complete(self, agent_name: str, prompt: str, *, temperature: float = 0.0) -> str:
        self.calls.append((agent_name, prompt))
        queue = self._queues.get(agent_name)
        if not queue:
            raise GatewayError(f"scripted gateway has no response left for {agent_name!r}")
        return queue.pop(0)


class RecordingGateway:
    """Wraps another gateway and records a replayable transcript."""

    def __init__(self, inner: ChatGateway):
        self.inner = inner
        self.transcript = MockTranscript()

    def complete(self, agent_name: str, prompt: str, *, temperature: float = 0.0) -> str:
        response = self.inner.complete(agent_name, prompt, temperature=temperature)
        fingerprint = request_fingerprint(agent_name, prompt)
        existing = self.transcript.lookup(fingerprint)
        if existing is None:
            self.transcript.add(fingerprint, response, raw=True)
        elif existing != response:
            raise ValidationError(
                f"non-deterministic response for fingerprint {fingerprint}")
        return response


# ---------------------------------------------------------------------------
# Live provider
# ---------------------------------------------------------------------------

API_KEY_ENV = "TONEMAIL_API_KEY"


class HttpChatGateway:
    """Minimal chat-completion client for an OpenAI-compatible endpoint."""

    def __init__(self, endpoint: str, model: str, *, timeout: float = 60.0,
                 api_key_env: str = API_KEY_ENV):
        key = os.environ.get(api_key_env, "")
        if not key:
            raise ConfigError(
                f"live gateway needs an API key in ${api_key_env}")
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.timeout = timeout
        self._headers = {"Authorization": f"Bearer {key}"}

    def complete(self, agent_name: str, prompt: str, *, temperature: float = 0.0) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        try:
            response = httpx.post(f"{self.endpoint}/chat/completions",
                                  json=payload, headers=self._headers,
                                  timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise GatewayError(f"LLM provider unreachable: {exc}") from exc
        if response.status_code != 200:
            raise GatewayError(
                f"LLM provider returned HTTP {response.status_code}",
                details={"body": response.text[:500]},
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise GatewayError(f"malformed provider response: {exc}") from exc
