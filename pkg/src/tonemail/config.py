"""Configuration loading and object wiring for the CLI and the HTTP API.

Configuration lives in a JSON file; the LLM API key is read from the
environment only (never from the file). Mock mode wires a deterministic
clock and id sequence so repeated runs produce byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .catalog import Catalog, load_catalog
from .errors import ConfigError
from .gateway import API_KEY_ENV, ChatGateway, HttpChatGateway, MockGateway, MockTranscript
from .pipeline import (
    AgentPipeline,
    PipelineConfig,
    RandomIdFactory,
    SequentialIdFactory,
    SystemClock,
    TickClock,
)
from .prompts import PromptLibrary
from .service import CompositionService, ServiceConfig
from .store import ReuseStore, SimilarityWeights


@dataclass
class GatewaySettings:
    mode: str = "mock"  # "mock" | "live"
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-4o-mini"
    transcript_path: Optional[str] = None
    timeout_seconds: float = 60.0
    api_key_env: str = API_KEY_ENV


@dataclass
class RetrievalSettings:
    top_k: int = 3
    threshold: float = 0.25
    text_weight: float = 0.6
    context_weight: float = 0.4


@dataclass
class AppConfig:
    store_path: str = "tonemail_store.json"
    catalog_path: Optional[str] = None
    prompt_dir: Optional[str] = None
    gateway: GatewaySettings = field(default_factory=GatewaySettings)
    retrieval: RetrievalSettings = field(default_factory=RetrievalSettings)
    min_factors: int = 6
    alternatives_count: int = 2
    max_retries: int = 2
    generation_temperature: float = 0.7
    rewrite_temperature: float = 0.7

    @classmethod
    def load(cls, path: str | Path) -> "AppConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        config = cls()
        for key in ("store_path", "catalog_path", "prompt_dir", "min_factors",
                    "alternatives_count", "max_retries", "generation_temperature",
                    "rewrite_temperature"):
            if key in data:
                setattr(config, key, data[key])
        for key, value in data.get("gateway", {}).items():
            if not hasattr(config.gateway, key):
                raise ConfigError(f"unknown gateway setting {key!r}")
            setattr(config.gateway, key, value)
        for key, value in data.get("retrieval", {}).items():
            if not hasattr(config.retrieval, key):
                raise ConfigError(f"unknown retrieval setting {key!r}")
            setattr(config.retrieval, key, value)
        return config


def build_gateway(config: AppConfig) -> ChatGateway:
    settings = config.gateway
    if settings.mode == "mock":
        if not settings.transcript_path:
            raise ConfigError("mock gateway needs gateway.transcript_path")
        return MockGateway(MockTranscript.load(settings.transcript_path))
    if settings.mode == "live":
        return HttpChatGateway(settings.endpoint, settings.model,
                               timeout=settings.timeout_seconds,
                               api_key_env=settings.api_key_env)
    raise ConfigError(f"unknown gateway mode {settings.mode!r}")


def build_service(config: AppConfig,
                  gateway: ChatGateway | None = None) -> CompositionService:
    """Wire catalog, prompts, pipeline, store, and service from one config."""
    deterministic = config.gateway.mode == "mock"
    gateway = gateway if gateway is not None else build_gateway(config)
    catalog: Catalog = load_catalog(config.catalog_path)
    prompts = PromptLibrary(config.prompt_dir)
    ids = SequentialIdFactory() if deterministic else RandomIdFactory()
    clock = TickClock() if deterministic else SystemClock()
    pipeline = AgentPipeline(
        gateway, prompts, ids=ids, clock=clock,
        config=PipelineConfig(
            max_retries=config.max_retries,
            alternatives_count=config.alternatives_count,
            generation_temperature=config.generation_temperature,
            rewrite_temperature=config.rewrite_temperature,
        ))
    store = ReuseStore(
        config.store_path,
        weights=SimilarityWeights(text=config.retrieval.text_weight,
                                  context=config.retrieval.context_weight),
        threshold=config.retrieval.threshold,
        top_k=config.retrieval.top_k,
    )
    service_config = ServiceConfig(
        min_factors=config.min_factors,
        retrieval_top_k=config.retrieval.top_k,
        retrieval_threshold=config.retrieval.threshold,
        max_retries=config.max_retries,
    )
    return CompositionService(catalog=catalog, pipeline=pipeline, store=store,
                              config=service_config, ids=ids, clock=clock)
