"""Benchmark harness: corpus generator invariants and metric wiring."""
from datetime import date

import pytest

from nuggetbase.evalharness import (
    SYSTEM_NAMES,
    SyntheticCorpusSpec,
    build_schema,
    generate_corpus,
    run_eval,
)

SMALL = SyntheticCorpusSpec(n_entities=4, changes_per_entity=3, seed=7)


@pytest.fixture(scope="module")
def small_corpus():
    return generate_corpus(SMALL)


def test_corpus_is_deterministic(small_corpus):
    again = generate_corpus(SMALL)
    assert [(d.doc_id, d.timestamp, d.text) for d in again.documents] == [
        (d.doc_id, d.timestamp, d.text) for d in small_corpus.documents
    ]
    assert again.gold == small_corpus.gold
    assert again.queries == small_corpus.queries


def test_gold_timelines_partition_time(small_corpus):
    assert len(small_corpus.gold) == SMALL.n_entities * SMALL.changes_per_entity
    by_key = {}
    for g in small_corpus.gold:
        by_key.setdefault((g.subject_norm, g.predicate), []).append(g)
    assert len(by_key) == SMALL.n_entities
    for segments in by_key.values():
        segments.sort(key=lambda g: g.t_start)
        for a, b in zip(segments, segments[1:]):
            assert a.t_end == b.t_start  # seamless succession
        assert segments[-1].t_end is None
        assert [g.vitality for g in segments] == ["okay"] * (len(segments) - 1) + [
            "vital"
        ]
        # one officeholder at a time
        values = [g.value_norm for g in segments]
        assert len(set(values)) == len(values)


def test_queries_point_into_gold(small_corpus):
    assert len(small_corpus.queries) == len(small_corpus.gold)
    for q in small_corpus.queries:
        g = small_corpus.gold[q.gold_index]
        assert (g.subject_norm, g.predicate) == (q.subject_norm, q.predicate)
        assert g.value_norm == q.gold_value_norm
        assert g.t_start <= q.t
        assert g.t_end is None or q.t < g.t_end


def test_documents_have_unique_ids(small_corpus):
    ids = [d.doc_id for d in small_corpus.documents]
    assert len(ids) == len(set(ids))
    assert all(d.timestamp >= SMALL.date_range[0] for d in small_corpus.documents)


def test_revisions_reference_known_documents(small_corpus):
    ids = {d.doc_id for d in small_corpus.documents}
    for d in small_corpus.documents:
        if d.revision_of is not None:
            assert d.revision_of in ids


def test_schema_covers_generated_predicates(small_corpus):
    schema = build_schema()
    predicates = {g.predicate for g in small_corpus.gold}
    assert predicates <= {e.canonical_name for e in schema.entries}


def test_spec_round_trip():
    assert SyntheticCorpusSpec.from_dict(SMALL.to_dict()) == SMALL


def test_unknown_system_rejected():
    with pytest.raises(ValueError):
        run_eval(SMALL, systems=("nugget_active", "oracle_cheat"))


def test_report_shape(small_corpus):
    out = run_eval(SMALL, systems=("nugget_active",), k=10, corpus=small_corpus)
    assert out["spec"] == SMALL.to_dict()
    assert out["k"] == 10
    report = out["systems"]["nugget_active"]
    assert set(report) >= {
        "system",
        "nugget_recall_at_k",
        "temporal_correctness",
        "conflict_rate",
        "governance_score",
        "median_context_tokens",
        "latency_p50_ms",
        "latency_p95_ms",
    }
    assert 0.0 <= report["nugget_recall_at_k"] <= 1.0
    assert 0.0 <= report["conflict_rate"] <= 1.0
    assert report["latency_p95_ms"] >= report["latency_p50_ms"] >= 0.0


def test_conflict_free_corpus_scores_clean():
    spec = SyntheticCorpusSpec(
        n_entities=6,
        changes_per_entity=4,
        distractor_rate=0.0,
        revision_noise_rate=0.0,
        seed=11,
    )
    out = run_eval(spec, systems=("nugget_active",), k=10)
    report = out["systems"]["nugget_active"]
    assert report["conflict_rate"] == 0.0
    assert report["nugget_recall_at_k"] >= 0.7


def test_governed_system_beats_propositions_on_time(small_corpus):
    out = run_eval(
        SMALL, systems=("nugget_active", "proposition"), k=10, corpus=small_corpus
    )
    governed = out["systems"]["nugget_active"]
    flat = out["systems"]["proposition"]
    assert governed["temporal_correctness"] >= flat["temporal_correctness"]
    assert governed["median_context_tokens"] <= flat["median_context_tokens"]


def test_progress_callback_sees_each_system(small_corpus):
    seen = []
    run_eval(
        SMALL,
        systems=("nugget_active", "passage_bm25"),
        k=5,
        corpus=small_corpus,
        progress=seen.append,
    )
    assert seen == ["nugget_active", "passage_bm25"]


def test_system_name_registry_is_stable():
    assert SYSTEM_NAMES == (
        "nugget_active",
        "nugget_full",
        "nugget_novalidity",
        "proposition",
        "passage_bm25",
        "time_filter",
        "recency_rerank",
        "latest_snapshot",
    )
