"""Durable persistence for anchors and stylebook records, plus retrieval.

The store is a single JSON document written atomically (temp file, fsync,
rename) under an advisory file lock; a crash between the temp write and the
rename leaves the previous store intact. Retrieval ranks records with a
deterministic lexical scorer by default; an embedding provider can be
plugged in, and an optional re-rank hook may reorder the final top-k.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence

from filelock import FileLock

from .domain import (
    Anchor,
    QuickFixSuggestion,
    Span,
    StylebookRecord,
    ValidationReport,
)
from .errors import NotFoundError, StorageError, ValidationError

SCHEMA_VERSION = 1

#: Migration hooks: version -> function rewriting the raw payload to version+1.
MIGRATIONS: dict[int, Callable[[dict], dict]] = {}


# ---------------------------------------------------------------------------
# Similarity scoring
# ---------------------------------------------------------------------------


class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> Sequence[float]: ...


@dataclass(frozen=True)
class SimilarityWeights:
    text: float = 0.6
    context: float = 0.4

    def __post_init__(self):
        if self.text < 0 or self.context < 0:
            raise ValidationError("similarity weights must be non-negative")
        if abs(self.text + self.context - 1.0) > 1e-9:
            raise ValidationError("similarity weights must sum to 1")


@dataclass(frozen=True)
class SimilarityQuery:
    selected_text: str
    receiver_summary: str = ""
    occasion_summary: str = ""
    top_k: int = 3
    threshold: float = 0.25

    def __post_init__(self):
        if not self.selected_text:
            raise ValidationError("similarity query needs non-empty selected_text")
        if self.top_k < 1:
            raise ValidationError("top_k must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValidationError("threshold must lie in [0, 1]")


_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> frozenset[str]:
    """Lowercase alphanumeric token set used by the lexical scorer."""
    return frozenset(_TOKEN.findall(text.lower()))


def jaccard(left: str, right: str) -> float:
    a, b = tokenize(left), tokenize(right)
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


def _cosine_rescaled(a: Sequence[float], b: Sequence[float]) -> float:
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(x * x for x in b))
    if norm_a == 0 or norm_b == 0:
        return 0.0
    cosine = sum(x * y for x, y in zip(a, b)) / (norm_a * norm_b)
    return min(max((cosine + 1.0) / 2.0, 0.0), 1.0)


def similarity(query: SimilarityQuery, record: StylebookRecord,
               weights: SimilarityWeights | None = None,
               embedder: EmbeddingProvider | None = None) -> float:
    """Deterministic score in [0, 1] mixing text and context similarity."""
    weights = weights or SimilarityWeights()
    query_context = f"{query.receiver_summary} {query.occasion_summary}"
    record_context = f"{record.receiver_description} {record.occasion_description}"
    if embedder is None:
        text_sim = jaccard(query.selected_text, record.original_text)
        context_sim = jaccard(query_context, record_context)
    else:
        text_sim = _cosine_rescaled(embedder.embed(query.selected_text),
                                    embedder.embed(record.original_text))
        context_sim = _cosine_rescaled(embedder.embed(query_context),
                                       embedder.embed(record_context))
    return weights.text * text_sim + weights.context * context_sim


RerankHook = Callable[[SimilarityQuery, list[QuickFixSuggestion]],
                      list[QuickFixSuggestion]]


# ---------------------------------------------------------------------------
# File handling
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.",
                                    suffix=".tmp")
    tmp = Path(tmp_name)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageError(f"cannot write store file {path}: {exc}") from exc
    finally:
        if tmp.exists():
            try:
                tmp.unlink()
            except OSError:
                pass


def _load_payload(path: Path) -> dict:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"cannot read store file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise StorageError(f"store file {path} is not valid JSON: {exc}") from exc
    version = data.get("schema_version")
    while isinstance(version, int) and version < SCHEMA_VERSION:
        migration = MIGRATIONS.get(version)
        if migration is None:
            raise StorageError(f"no migration from store schema version {version}")
        data = migration(data)
        version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise StorageError(f"unrecognized store schema version {version!r}")
    return data


def verify_store_payload(data: dict) -> ValidationReport:
    """Run every store invariant against a raw payload; report violations."""
    report = ValidationReport()
    if data.get("schema_version") != SCHEMA_VERSION:
        report.add("schema_version",
                   f"unrecognized schema version {data.get('schema_version')!r}")
    if not isinstance(data.get("write_counter"), int) or data.get("write_counter", -1) < 0:
        report.add("write_counter", "write_counter must be a non-negative integer")
    for list_name, loader, id_field in (
        ("anchors", Anchor.from_dict, "anchor_id"),
        ("records", StylebookRecord.from_dict, "record_id"),
    ):
        seen: set[str] = set()
        for position, raw in enumerate(data.get(list_name, [])):
            item_id = raw.get(id_field, f"<{list_name}[{position}]>")
            if item_id in seen:
                report.add("duplicate_id", f"duplicate {id_field} {item_id!r}",
                           id=item_id)
            seen.add(item_id)
            try:
                loader(raw)
            except (ValidationError, KeyError, TypeError, ValueError) as exc:
                report.add("invalid_entry",
                           f"{list_name}[{position}] ({item_id}) is invalid: {exc}",
                           id=item_id)
    return report


def verify_store_file(path: str | Path) -> ValidationReport:
    return verify_store_payload(_load_payload(Path(path)))


# ---------------------------------------------------------------------------
# The store
# ---------------------------------------------------------------------------


class ReuseStore:
    """Anchors and stylebook records behind one JSON file.

    Thread-safe for in-process use; the advisory ``.lock`` file serializes
    writers across processes. Readers get snapshot copies.
    """

    def __init__(self, path: str | Path, *,
                 weights: SimilarityWeights | None = None,
                 threshold: float = 0.25, top_k: int = 3,
                 embedder: EmbeddingProvider | None = None,
                 reranker: RerankHook | None = None):
        self.path = Path(path)
        self.weights = weights or SimilarityWeights()
        self.threshold = threshold
        self.top_k = top_k
        self.embedder = embedder
        self.reranker = reranker
        self._lock = threading.RLock()
        self._file_lock = FileLock(str(self.path) + ".lock")
        self._anchors: list[Anchor] = []
        self._records: list[StylebookRecord] = []
        self.write_counter = 0
        if self.path.exists():
            self._load()

    # -- persistence -------------------------------------------------------

    def _load(self) -> None:
        data = _load_payload(self.path)
        self._anchors = [Anchor.from_dict(raw) for raw in data.get("anchors", [])]
        self._records = [StylebookRecord.from_dict(raw)
                         for raw in data.get("records", [])]
        self.write_counter = int(data.get("write_counter", 0))

    def _payload(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "write_counter": self.write_counter,
            "anchors": [anchor.to_dict() for anchor in self._anchors],
            "records": [record.to_dict() for record in self._records],
        }

    def _persist(self) -> None:
        self.write_counter += 1
        text = json.dumps(self._payload(), ensure_ascii=False, indent=2,
                          sort_keys=True) + "\n"
        try:
            with self._file_lock:
                _atomic_write(self.path, text)
        except StorageError:
            self.write_counter -= 1
            raise

    def export(self, path: str | Path) -> None:
        """Write the current contents to another file in the same format."""
        with self._lock:
            text = json.dumps(self._payload(), ensure_ascii=False, indent=2,
                              sort_keys=True) + "\n"
        _atomic_write(Path(path), text)

    def import_from(self, path: str | Path) -> tuple[int, int]:
        """Merge anchors and records from an exported file; returns counts.

        Entries whose ids already exist are skipped. The imported file is
        read permissively; run :func:`verify_store_file` to audit it.
        """
        data = _load_payload(Path(path))
        imported_anchors = imported_records = 0
        with self._lock:
            anchor_ids = {anchor.anchor_id for anchor in self._anchors}
            record_ids = {record.record_id for record in self._records}
            for raw in data.get("anchors", []):
                anchor = Anchor.from_dict(raw)
                if anchor.anchor_id not in anchor_ids:
                    self._anchors.append(anchor)
                    anchor_ids.add(anchor.anchor_id)
                    imported_anchors += 1
            for raw in data.get("records", []):
                record = StylebookRecord.from_dict(raw)
                if record.record_id not in record_ids:
                    self._records.append(record)
                    record_ids.add(record.record_id)
                    imported_records += 1
            self._persist()
        return imported_anchors, imported_records

    # -- anchors -----------------------------------------------------------

    def save_anchor(self, anchor: Anchor) -> Anchor:
        with self._lock:
            if any(existing.anchor_id == anchor.anchor_id for existing in self._anchors):
                raise ValidationError(f"anchor id {anchor.anchor_id!r} already exists")
            self._anchors.append(anchor)
            self._persist()
        return anchor

    def get_anchor(self, anchor_id: str) -> Anchor:
        with self._lock:
            for anchor in self._anchors:
                if anchor.anchor_id == anchor_id:
                    return anchor
        raise NotFoundError(f"no anchor with id {anchor_id!r}")

    def list_anchors(self) -> list[Anchor]:
        with self._lock:
            return sorted(reversed(self._anchors),
                          key=lambda a: a.created_at, reverse=True)

    def rename_anchor(self, anchor_id: str, name: str) -> Anchor:
        if not name or not name.strip():
            raise ValidationError("anchor name must be non-empty")
        with self._lock:
            for index, anchor in enumerate(self._anchors):
                if anchor.anchor_id == anchor_id:
                    renamed = replace(anchor, name=name.strip())
                    self._anchors[index] = renamed
                    self._persist()
                    return renamed
        raise NotFoundError(f"no anchor with id {anchor_id!r}")

    def delete_anchor(self, anchor_id: str) -> bool:
        """Idempotent delete; returns whether the anchor existed."""
        with self._lock:
            remaining = [a for a in self._anchors if a.anchor_id != anchor_id]
            existed = len(remaining) != len(self._anchors)
            if existed:
                self._anchors = remaining
                self._persist()
        return existed

    # -- stylebook records ---------------------------------------------------

    def save_record(self, record: StylebookRecord) -> StylebookRecord:
        with self._lock:
            if any(existing.record_id == record.record_id for existing in self._records):
                raise ValidationError(f"record id {record.record_id!r} already exists")
            self._records.append(record)
            self._persist()
        return record

    def get_record(self, record_id: str) -> StylebookRecord:
        with self._lock:
            for record in self._records:
                if record.record_id == record_id:
                    return record
        raise NotFoundError(f"no stylebook record with id {record_id!r}")

    def update_record(self, record: StylebookRecord) -> StylebookRecord:
        with self._lock:
            for index, existing in enumerate(self._records):
                if existing.record_id == record.record_id:
                    self._records[index] = record
                    self._persist()
                    return record
        raise NotFoundError(f"no stylebook record with id {record.record_id!r}")

    def list_records(self) -> list[StylebookRecord]:
        with self._lock:
            return sorted(reversed(self._records),
                          key=lambda r: r.created_at, reverse=True)

    def delete_record(self, record_id: str) -> bool:
        with self._lock:
            remaining = [r for r in self._records if r.record_id != record_id]
            existed = len(remaining) != len(self._records)
            if existed:
                self._records = remaining
                self._persist()
        return existed

    def bump_usage(self, record_id: str, accepted: bool) -> StylebookRecord:
        with self._lock:
            record = self.get_record(record_id)
            bumped = replace(record,
                             usage_count=record.usage_count + 1,
                             acceptance_count=record.acceptance_count + (1 if accepted else 0))
            return self.update_record(bumped)

    def rollback_acceptance(self, record_id: str) -> StylebookRecord:
        """Compensate one accepted usage after an undo."""
        with self._lock:
            record = self.get_record(record_id)
            if record.acceptance_count == 0:
                return record
            return self.update_record(
                replace(record, acceptance_count=record.acceptance_count - 1))

    # -- retrieval -----------------------------------------------------------

    def score(self, query: SimilarityQuery, record: StylebookRecord) -> float:
        return similarity(query, record, self.weights, self.embedder)

    def retrieve_quickfixes(self, query: SimilarityQuery,
                            target_span: Span | None = None
                            ) -> list[QuickFixSuggestion]:
        """Rank stored records against the query.

        Records scoring below the query threshold are dropped; the rest are
        ordered by (score desc, created_at desc, record_id asc) for a total
        deterministic order and truncated to ``top_k``. ``proposed_text``
        stays unset until a quickfix is actually applied.
        """
        span = target_span if target_span is not None else (0, len(query.selected_text))
        with self._lock:
            records = list(self._records)
        scored = [(self.score(query, record), record) for record in records]
        kept = [(score, record) for score, record in scored
                if score >= query.threshold]
        kept.sort(key=lambda item: (-item[0], -item[1].created_at.timestamp(),
                                    item[1].record_id))
        suggestions = [
            QuickFixSuggestion(record_id=record.record_id, target_span=span,
                               similarity_score=score)
            for score, record in kept[:query.top_k]
        ]
        if self.reranker is not None and suggestions:
            suggestions = self.reranker(query, suggestions)
        return suggestions
