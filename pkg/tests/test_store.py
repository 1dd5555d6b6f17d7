"""Reuse store: CRUD, durability, similarity scoring, retrieval ranking."""

import json
import os
from datetime import datetime, timedelta, timezone
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tonemail.store as store_module
from tonemail.domain import Anchor, AnchorKind, FactorSelection, TaskContext
from tonemail.errors import NotFoundError, StorageError, ValidationError
from tonemail.store import (
    ReuseStore,
    SimilarityQuery,
    SimilarityWeights,
    jaccard,
    similarity,
    tokenize,
    verify_store_file,
)

from helpers import make_record
from oracles import retrieval_oracle

BASE_TIME = datetime(2026, 1, 1, tzinfo=timezone.utc)


def mentor_anchor(anchor_id="anchor-1", created_at=BASE_TIME):
    return Anchor(
        anchor_id=anchor_id,
        kind=AnchorKind.PERSONA,
        name="Familiar Senior Academic Mentors",
        factor_configuration=[
            FactorSelection(factor_id="familiarity", selected_option="Very close"),
            FactorSelection(factor_id="power_status",
                            selected_option="Significant power difference"),
        ],
        source_task=TaskContext(task_description="Apologize to my mentor"),
        created_at=created_at,
    )


# ---------------------------------------------------------------------------
# CRUD
# ---------------------------------------------------------------------------


def test_anchor_round_trip(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    saved = store.save_anchor(mentor_anchor())
    reopened = ReuseStore(tmp_path / "store.json")
    assert reopened.get_anchor("anchor-1") == saved


def test_delete_anchor_is_idempotent(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    store.save_anchor(mentor_anchor())
    assert store.delete_anchor("anchor-1") is True
    assert store.delete_anchor("anchor-1") is False  # reported, not an error


def test_list_on_empty_store(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    assert store.list_anchors() == []
    assert store.list_records() == []


def test_lists_are_newest_first(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    for offset in (0, 60, 30):
        store.save_anchor(mentor_anchor(f"anchor-{offset}",
                                        BASE_TIME + timedelta(seconds=offset)))
    assert [a.anchor_id for a in store.list_anchors()] == \
        ["anchor-60", "anchor-30", "anchor-0"]


def test_record_crud_and_usage_counters(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    record = make_record("r1", "the tone is rather elaborate",
                         "straightforward and clear",
                         name="make the tone straightforward and clear")
    store.save_record(record)
    assert [r.record_id for r in store.list_records()] == ["r1"]

    bumped = store.bump_usage("r1", accepted=False)
    assert (bumped.usage_count, bumped.acceptance_count) == (1, 0)
    bumped = store.bump_usage("r1", accepted=True)
    assert (bumped.usage_count, bumped.acceptance_count) == (2, 1)
    rolled = store.rollback_acceptance("r1")
    assert (rolled.usage_count, rolled.acceptance_count) == (2, 0)

    with pytest.raises(NotFoundError):
        store.bump_usage("missing", accepted=True)
    assert store.delete_record("r1") is True
    assert store.delete_record("r1") is False


def test_rename_anchor(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    store.save_anchor(mentor_anchor())
    renamed = store.rename_anchor("anchor-1", "Close Academic Mentors")
    assert renamed.name == "Close Academic Mentors"
    assert ReuseStore(tmp_path / "store.json").get_anchor("anchor-1").name \
        == "Close Academic Mentors"
    with pytest.raises(NotFoundError):
        store.rename_anchor("ghost", "x")


def test_duplicate_ids_rejected_on_save(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    store.save_anchor(mentor_anchor())
    with pytest.raises(ValidationError):
        store.save_anchor(mentor_anchor())


def test_write_counter_increases_per_save(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    counters = [store.write_counter]
    store.save_anchor(mentor_anchor("a1"))
    counters.append(store.write_counter)
    store.save_record(make_record("r1", "a", "b"))
    counters.append(store.write_counter)
    store.delete_anchor("a1")
    counters.append(store.write_counter)
    assert counters == sorted(counters) and len(set(counters)) == len(counters)
    assert ReuseStore(tmp_path / "store.json").write_counter == counters[-1]


# ---------------------------------------------------------------------------
# Round-trip and durability properties
# ---------------------------------------------------------------------------


text_strategy = st.text(min_size=1, max_size=40).filter(lambda s: s.strip())
option_strategy = st.one_of(st.none(), text_strategy)


@st.composite
def selections_strategy(draw):
    factor_ids = draw(st.lists(
        st.sampled_from(["familiarity", "power_status", "age", "occasion",
                         "promptness", "emotional_intent"]),
        unique=True, min_size=1, max_size=4))
    selections = []
    for factor_id in factor_ids:
        option = draw(option_strategy)
        elaboration = draw(option_strategy) if option is None else draw(option_strategy)
        if option is None and elaboration is None:
            option = draw(text_strategy)
        selections.append(FactorSelection(factor_id=factor_id,
                                          selected_option=option,
                                          elaboration=elaboration))
    return selections


@st.composite
def anchor_strategy(draw, anchor_id):
    return Anchor(
        anchor_id=anchor_id,
        kind=draw(st.sampled_from(list(AnchorKind))),
        name=draw(text_strategy),
        factor_configuration=draw(selections_strategy()),
        source_task=TaskContext(task_description=draw(text_strategy)),
        created_at=BASE_TIME + timedelta(seconds=draw(st.integers(0, 10_000))),
    )


@st.composite
def record_strategy(draw, record_id):
    original = draw(text_strategy)
    usage = draw(st.integers(0, 20))
    return make_record(
        record_id, original, original + draw(text_strategy),
        name=draw(text_strategy), rationale=draw(text_strategy),
        receiver=draw(text_strategy), occasion=draw(text_strategy),
        created_at=BASE_TIME + timedelta(seconds=draw(st.integers(0, 10_000))),
        usage=usage, accepted=draw(st.integers(0, usage)),
    )


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_store_round_trip_preserves_values(tmp_path_factory, data):
    tmp_path = tmp_path_factory.mktemp("roundtrip")
    store = ReuseStore(tmp_path / "store.json")
    anchors = [data.draw(anchor_strategy(f"anchor-{i}"))
               for i in range(data.draw(st.integers(0, 3)))]
    records = [data.draw(record_strategy(f"record-{i}"))
               for i in range(data.draw(st.integers(0, 3)))]
    for anchor in anchors:
        store.save_anchor(anchor)
    for record in records:
        store.save_record(record)
    reopened = ReuseStore(tmp_path / "store.json")
    assert sorted(reopened.list_anchors(), key=lambda a: a.anchor_id) == \
        sorted(anchors, key=lambda a: a.anchor_id)
    assert sorted(reopened.list_records(), key=lambda r: r.record_id) == \
        sorted(records, key=lambda r: r.record_id)


def test_crash_between_temp_write_and_rename_preserves_store(tmp_path, monkeypatch):
    path = tmp_path / "store.json"
    store = ReuseStore(path)
    store.save_anchor(mentor_anchor("anchor-1"))
    before = path.read_bytes()

    def exploding_replace(src, dst):
        raise OSError("simulated crash before rename")

    monkeypatch.setattr(store_module.os, "replace", exploding_replace)
    with pytest.raises(StorageError):
        store.save_anchor(mentor_anchor("anchor-2"))
    monkeypatch.undo()

    assert path.read_bytes() == before
    survivor = ReuseStore(path)
    assert [a.anchor_id for a in survivor.list_anchors()] == ["anchor-1"]
    assert not list(tmp_path.glob("*.tmp"))


def test_export_import_round_trip(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    store.save_anchor(mentor_anchor())
    store.save_record(make_record("r1", "don't be so sappy", "keep it level",
                                  name="don't be so sappy"))
    export_path = tmp_path / "export.json"
    store.export(export_path)
    target = ReuseStore(tmp_path / "other.json")
    counts = target.import_from(export_path)
    assert counts == (1, 1)
    assert target.get_anchor("anchor-1") == store.get_anchor("anchor-1")
    assert target.get_record("r1") == store.get_record("r1")


def test_verify_reports_duplicate_ids_and_bad_entries(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    store.save_record(make_record("r1", "a", "b"))
    store.export(tmp_path / "tampered.json")
    payload = json.loads((tmp_path / "tampered.json").read_text())
    payload["records"].append(dict(payload["records"][0]))  # duplicate id
    broken = dict(payload["records"][0], record_id="r2", revised_text="a")
    payload["records"].append(broken)  # original == revised
    (tmp_path / "tampered.json").write_text(json.dumps(payload))

    report = verify_store_file(tmp_path / "tampered.json")
    codes = report.codes()
    assert "duplicate_id" in codes and "invalid_entry" in codes
    assert verify_store_file(tmp_path / "store.json").ok


def test_unrecognized_schema_version(tmp_path):
    path = tmp_path / "store.json"
    path.write_text(json.dumps({"schema_version": 99, "anchors": [],
                                "records": [], "write_counter": 0}))
    with pytest.raises(StorageError):
        ReuseStore(path)


# ---------------------------------------------------------------------------
# Similarity
# ---------------------------------------------------------------------------


def query(text, receiver="", occasion="", top_k=3, threshold=0.25):
    return SimilarityQuery(selected_text=text, receiver_summary=receiver,
                           occasion_summary=occasion, top_k=top_k,
                           threshold=threshold)


def test_similarity_identical_inputs_is_one():
    record = make_record("r1", "hello there friend", "hi",
                         receiver="a colleague", occasion="status update")
    q = query("hello there friend", receiver="a colleague",
              occasion="status update")
    assert similarity(q, record) == pytest.approx(1.0)


def test_similarity_disjoint_inputs_is_zero():
    record = make_record("r1", "alpha beta gamma", "x",
                         receiver="delta", occasion="epsilon")
    q = query("one two three", receiver="four", occasion="five")
    assert similarity(q, record) == 0.0


def test_pinned_jaccard_regression_six_sevenths():
    record = make_record("r1", "I hope this email finds you well", "Hi",
                         receiver="anyone", occasion="anything")
    q = query("hope this email finds you well")
    score = similarity(q, record, SimilarityWeights(text=1.0, context=0.0))
    assert abs(score - Fraction(6, 7)) < 1e-12
    # The underlying token sets, by hand.
    assert tokenize("hope this email finds you well") == \
        {"hope", "this", "email", "finds", "you", "well"}
    assert jaccard("hope this email finds you well",
                   "I hope this email finds you well") == pytest.approx(6 / 7)


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=30), st.text(max_size=30))
def test_jaccard_symmetric_bounded_reflexive(a, b):
    score = jaccard(a, b)
    assert 0.0 <= score <= 1.0
    assert score == jaccard(b, a)
    assert jaccard(a, a) == 1.0


def test_similarity_with_embedding_provider():
    class ToyEmbedder:
        def embed(self, text):
            return [float(len(tokenize(text))), 1.0]

    record = make_record("r1", "alpha beta", "x", receiver="r", occasion="o")
    q = query("alpha beta", receiver="r", occasion="o")
    score = similarity(q, record, embedder=ToyEmbedder())
    assert score == pytest.approx(1.0)
    assert 0.0 <= score <= 1.0


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------


def seeded_records():
    texts = [
        "I hope this email finds you well",
        "thank you so much for your generous time",
        "please let me know if you have questions",
        "I hope you are doing well",
        "best regards and thanks again",
    ]
    return [
        make_record(f"r{i}", text, text + " (revised)",
                    receiver="professor", occasion="follow up",
                    created_at=BASE_TIME + timedelta(seconds=i))
        for i, text in enumerate(texts)
    ]


def test_retrieve_empty_store(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    assert store.retrieve_quickfixes(query("anything at all")) == []


def test_retrieve_top_k_matches_bruteforce_oracle(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    for record in seeded_records():
        store.save_record(record)
    q = query("hope this email finds you well", receiver="professor",
              occasion="follow up", top_k=2)
    suggestions = store.retrieve_quickfixes(q, target_span=(10, 40))
    assert [s.record_id for s in suggestions] == \
        retrieval_oracle(seeded_records(), q)
    assert all(s.target_span == (10, 40) for s in suggestions)
    assert all(s.proposed_text is None for s in suggestions)
    assert all(s.similarity_score >= q.threshold for s in suggestions)


def test_retrieve_all_below_threshold(tmp_path):
    store = ReuseStore(tmp_path / "store.json")
    for record in seeded_records():
        store.save_record(record)
    q = query("zzz qqq xxx completely unrelated", threshold=0.3)
    assert store.retrieve_quickfixes(q) == []


def test_rerank_hook_is_applied_when_configured(tmp_path):
    def reverse_rerank(q, suggestions):
        return list(reversed(suggestions))

    store = ReuseStore(tmp_path / "store.json", reranker=reverse_rerank)
    for record in seeded_records():
        store.save_record(record)
    q = query("hope this email finds you well", receiver="professor",
              occasion="follow up", top_k=3)
    plain = ReuseStore(tmp_path / "store.json").retrieve_quickfixes(q)
    reranked = store.retrieve_quickfixes(q)
    assert [s.record_id for s in reranked] == \
        [s.record_id for s in reversed(plain)]
