"""Engine facade: persistence, search channels, access heat, decisions."""
import json
from datetime import date

import pytest

from nuggetbase.canonicalize import FUNCTIONAL, PredicateSchema, Schema
from nuggetbase.config import Config, DenseConfig
from nuggetbase.extraction import Document
from nuggetbase.governance import (
    REASON_HOT_CHANGE,
    Decision,
    NotFoundError,
)
from nuggetbase.index.engine import NuggetEngine
from nuggetbase.model import (
    GLOBAL,
    EpistemicState,
    Evidence,
    FactTriple,
    NuggetKind,
    NuggetRecord,
    Provenance,
    Scope,
    Status,
    ValidityInterval,
    View,
    compute_nugget_id,
    load_jsonl,
)
from nuggetbase.pipeline import ingest_documents
from nuggetbase.retrieval import Query, retrieve

D = date


def org_schema():
    return Schema(
        [
            PredicateSchema(
                canonical_name="is headquartered in",
                aliases=("headquartered in",),
                subject_type="org",
                object_type="place",
                cardinality=FUNCTIONAL,
            )
        ]
    )


def doc(doc_id, ts, text, revision_of=None):
    return Document(doc_id=doc_id, timestamp=ts, text=text, revision_of=revision_of)


def make_record(
    obj,
    t_start=D(2020, 1, 1),
    t_end=None,
    subject="acme corp",
    scope=GLOBAL,
    doc_id="doc-0",
):
    fact = FactTriple(subject, subject, "is headquartered in", obj, obj)
    return NuggetRecord(
        id=compute_nugget_id(NuggetKind.SEMANTIC_FACT, fact, scope, t_start),
        kind=NuggetKind.SEMANTIC_FACT,
        fact=fact,
        text=f"{subject} is headquartered in {obj}.",
        validity=ValidityInterval(t_start=t_start, t_end=t_end, scope=scope),
        epistemic=EpistemicState(),
        provenance=Provenance(
            evidence=(Evidence(doc_id, 0, 30, t_start),),
            created_at=t_start,
            extractor_id="rule@1",
        ),
    )


SUCCESSION_DOCS = [
    doc(
        "d0",
        D(2020, 2, 1),
        "From January 1, 2018 to January 1, 2020, "
        "Acme Corp was headquartered in Lisbon.",
    ),
    doc(
        "d1",
        D(2020, 2, 2),
        "Since January 1, 2020, Acme Corp has been headquartered in Porto.",
    ),
]


# --- persistence -------------------------------------------------------------


def test_directory_round_trip(tmp_path):
    home = tmp_path / "idx"
    engine = NuggetEngine(schema=org_schema(), directory=home)
    ingest_documents(
        engine,
        [
            doc("d0", D(2019, 6, 1), "Acme Corp is headquartered in Lisbon."),
            doc("d1", D(2021, 2, 1), "Acme Corp is headquartered in Porto."),
            doc("n5", D(2020, 1, 1), "Vex Ltd is headquartered in Oslo. Filler line."),
            doc("n5b", D(2020, 7, 1), "Filler line.", revision_of="n5"),
        ],
    )
    before = {r.id: r for r in engine.all_records()}
    reviews_before = engine.review_items(open_only=True)
    engine.close()

    again = NuggetEngine(schema=org_schema(), directory=home)
    assert {r.id: r for r in again.all_records()} == before
    assert again.review_items(open_only=True) == reviews_before
    assert again.chain_for("n5b") == "n5"
    hits = again.bm25_search("vex ltd oslo", k=1)
    assert again.get_record(hits[0][0]).fact.subject_norm == "vex ltd"
    audit_lines = (home / "audit.jsonl").read_text().splitlines()
    assert len(audit_lines) >= 2  # the contested pair
    assert all("nugget_id" in json.loads(line) for line in audit_lines)
    again.close()


def test_decision_durable_across_reopen(tmp_path):
    home = tmp_path / "idx"
    engine = NuggetEngine(schema=org_schema(), directory=home)
    ingest_documents(
        engine,
        [
            doc("d0", D(2019, 6, 1), "Acme Corp is headquartered in Lisbon."),
            doc("d1", D(2021, 2, 1), "Acme Corp is headquartered in Porto."),
        ],
    )
    recs = {r.fact.object_norm: r for r in engine.all_records()}
    engine.apply_decision(
        recs["lisbon"].id,
        Decision(action="resolve_to", winner_id=recs["porto"].id, note="newer filing"),
    )
    engine.close()

    again = NuggetEngine(schema=org_schema(), directory=home)
    assert again.get_record(recs["porto"].id).epistemic.status is Status.ACTIVE
    assert again.get_record(recs["lisbon"].id).epistemic.status is Status.DEPRECATED
    assert again.review_items(open_only=True) == []
    again.close()


def test_duplicate_direct_insert_rejected():
    engine = NuggetEngine(schema=org_schema())
    r = make_record("lisbon")
    engine.insert_record(r)
    with pytest.raises(ValueError):
        engine.insert_record(r)


# --- end tightening and access heat -----------------------------------------


def test_tighten_end_applies_and_audits():
    engine = NuggetEngine(schema=org_schema())
    r = make_record("lisbon")
    engine.insert_record(r)
    engine.tighten_end(r.id, D(2021, 6, 1), now=D(2021, 6, 2))
    got = engine.get_record(r.id)
    assert got.validity.t_end == D(2021, 6, 1)
    assert got.validity.end_inferred
    assert len(engine._audit_rows) == 1
    assert engine._audit_rows[0].t_end_change == "2021-06-01"


def test_tighten_end_never_widens():
    engine = NuggetEngine(schema=org_schema())
    r = make_record("lisbon", t_end=D(2020, 6, 1))
    engine.insert_record(r)
    engine.tighten_end(r.id, D(2022, 1, 1), now=D(2022, 1, 2))
    assert engine.get_record(r.id).validity.t_end == D(2020, 6, 1)
    assert engine._audit_rows == []


def test_hot_record_change_queues_review():
    engine = NuggetEngine(schema=org_schema(), config=Config(hot_threshold=3))
    r = make_record("lisbon")
    engine.insert_record(r)
    for _ in range(3):
        engine.increment_access([r.id])
    assert engine.get_record(r.id).access_count == 3
    engine.tighten_end(r.id, D(2021, 6, 1), now=D(2021, 6, 2))
    items = engine.review_items(open_only=True)
    assert [i.reason for i in items] == [REASON_HOT_CHANGE]


def test_cool_record_change_skips_review():
    engine = NuggetEngine(schema=org_schema(), config=Config(hot_threshold=3))
    r = make_record("lisbon")
    engine.insert_record(r)
    engine.increment_access([r.id])
    engine.tighten_end(r.id, D(2021, 6, 1), now=D(2021, 6, 2))
    assert engine.review_items(open_only=True) == []


# --- search channels ---------------------------------------------------------


def test_bm25_ties_break_on_ascending_id():
    engine = NuggetEngine(schema=org_schema())
    a = make_record("lisbon", t_start=D(2018, 1, 1), t_end=D(2020, 1, 1))
    b = make_record("lisbon", t_start=D(2021, 1, 1))
    engine.insert_record(a)
    engine.insert_record(b)
    hits = engine.bm25_search("acme corp lisbon", k=2)
    assert hits[0][1] == pytest.approx(hits[1][1])
    assert [h[0] for h in hits] == sorted([a.id, b.id])


def test_bm25_respects_candidate_filter():
    engine = NuggetEngine(schema=org_schema())
    a = make_record("lisbon")
    b = make_record("porto", subject="vex ltd")
    engine.insert_record(a)
    engine.insert_record(b)
    hits = engine.bm25_search("headquartered", candidate_ids=[b.id], k=10)
    assert [h[0] for h in hits] == [b.id]


def test_dense_disabled_by_default():
    engine = NuggetEngine(schema=org_schema())
    assert not engine.dense_enabled
    with pytest.raises(RuntimeError):
        engine.dense_search(engine.embedder.embed("anything"), k=1)


def test_dense_enabled_search():
    engine = NuggetEngine(
        schema=org_schema(), config=Config(dense=DenseConfig(enabled=True))
    )
    a = make_record("lisbon")
    b = make_record("porto", subject="vex ltd")
    engine.insert_record(a)
    engine.insert_record(b)
    hits = engine.dense_search(engine.embedder.embed("acme corp lisbon"), k=1)
    assert hits[0][0] == a.id


# --- validity filtering ------------------------------------------------------


def seeded_engine():
    engine = NuggetEngine(schema=org_schema())
    past = make_record("lisbon", t_start=D(2018, 1, 1), t_end=D(2020, 1, 1))
    present = make_record("porto", t_start=D(2020, 1, 1))
    user = make_record(
        "oslo",
        subject="vex ltd",
        t_start=D(2018, 1, 1),
        scope=Scope("user", "alpha"),
    )
    for r in (past, present, user):
        engine.insert_record(r)
    return engine, past, present, user


def test_filter_valid_by_time():
    engine, past, present, user = seeded_engine()
    assert engine.filter_valid(D(2019, 6, 1)) == {past.id, user.id}
    assert engine.filter_valid(D(2021, 6, 1)) == {present.id, user.id}
    assert engine.filter_valid(D(2017, 6, 1)) == set()


def test_filter_valid_by_scope():
    engine, past, present, user = seeded_engine()
    got = engine.filter_valid(D(2021, 6, 1), scope_strs={"global"})
    assert got == {present.id}
    got = engine.filter_valid(D(2021, 6, 1), scope_strs={"global", "user:alpha"})
    assert got == {present.id, user.id}


def test_filter_valid_views():
    engine = NuggetEngine(schema=org_schema())
    engine.upsert(make_record("lisbon", t_start=D(2019, 1, 1)))
    engine.upsert(make_record("porto", t_start=D(2021, 1, 1), doc_id="doc-1"))
    t = D(2021, 6, 1)
    assert engine.filter_valid(t, View.ACTIVE) == set()
    both = engine.filter_valid(t, View.ACTIVE_PLUS_CONTESTED)
    assert len(both) == 2


# --- retrieval integration ---------------------------------------------------


def test_retrieve_orders_and_counts_access():
    engine = NuggetEngine(schema=org_schema())
    ingest_documents(engine, SUCCESSION_DOCS)
    result = retrieve(
        engine, Query(text="where is acme corp headquartered", t=D(2023, 1, 1), k=5)
    )
    assert len(result.entries) == 1
    top = result.entries[0].record
    assert top.fact.object_norm == "porto"
    assert top.epistemic.status is Status.ACTIVE
    assert result.context.startswith("Established facts:")
    assert "Porto" in result.context
    # the hit's access counter moved
    assert engine.get_record(top.id).access_count == 1


def test_retrieve_time_travel():
    engine = NuggetEngine(schema=org_schema())
    ingest_documents(engine, SUCCESSION_DOCS)
    result = retrieve(
        engine, Query(text="where is acme corp headquartered", t=D(2019, 6, 1), k=5)
    )
    assert [e.record.fact.object_norm for e in result.entries] == ["lisbon"]


def test_retrieve_ignore_validity_ablation():
    engine = NuggetEngine(schema=org_schema())
    ingest_documents(engine, SUCCESSION_DOCS)
    result = retrieve(
        engine,
        Query(text="where is acme corp headquartered", t=D(2023, 1, 1), k=5),
        ignore_validity=True,
    )
    assert {e.record.fact.object_norm for e in result.entries} == {"lisbon", "porto"}


def test_retrieve_empty_store():
    engine = NuggetEngine(schema=org_schema())
    result = retrieve(engine, Query(text="anything", t=D(2021, 1, 1)))
    assert result.entries == []
    assert result.context == ""


# --- bookkeeping -------------------------------------------------------------


def test_stats_shape():
    engine = NuggetEngine(schema=org_schema())
    ingest_documents(
        engine,
        [
            doc("d0", D(2019, 6, 1), "Acme Corp is headquartered in Lisbon."),
            doc("d1", D(2021, 2, 1), "Acme Corp is headquartered in Porto."),
        ],
    )
    stats = engine.stats()
    assert stats["records"] == 2
    assert stats["by_status"] == {"Active": 0, "Contested": 2, "Deprecated": 0}
    assert stats["open_reviews"] == 2
    assert stats["dense_enabled"] is False


def test_export_round_trips_through_jsonl():
    engine = NuggetEngine(schema=org_schema())
    ingest_documents(engine, SUCCESSION_DOCS)
    text = "\n".join(engine.export_jsonl())
    restored = list(load_jsonl(text))
    assert {r.id for r in restored} == {r.id for r in engine.all_records()}
    assert restored[0] == engine.get_record(restored[0].id)


def test_apply_decision_unknown_id():
    engine = NuggetEngine(schema=org_schema())
    with pytest.raises(NotFoundError):
        engine.apply_decision("missing", Decision(action="confirm_active"))
