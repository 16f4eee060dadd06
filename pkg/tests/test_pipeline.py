"""Batch ingest through a live engine: counts, quarantine, refinement."""
import json
from datetime import date

import pytest

from nuggetbase.canonicalize import FUNCTIONAL, PredicateSchema, Schema
from nuggetbase.extraction import Document
from nuggetbase.index.engine import NuggetEngine
from nuggetbase.model import Status
from nuggetbase.pipeline import COUNT_KEYS, ingest_documents

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


def make_engine():
    return NuggetEngine(schema=org_schema())


def doc(doc_id, ts, text, revision_of=None):
    return Document(doc_id=doc_id, timestamp=ts, text=text, revision_of=revision_of)


def counts_of(report, **expected):
    want = {k: 0 for k in COUNT_KEYS}
    want.update(expected)
    assert report.counts == want


def by_object(engine):
    return {r.fact.object_norm: r for r in engine.all_records()}


def test_single_fact_ingest():
    engine = make_engine()
    report = ingest_documents(
        engine, [doc("d0", D(2020, 1, 1), "Acme Corp is headquartered in Lisbon.")]
    )
    counts_of(report, documents=1, candidates=1, inserted=1)
    (record,) = engine.all_records()
    assert record.fact.subject_norm == "acme corp"
    assert record.fact.predicate == "is headquartered in"
    assert record.fact.object_norm == "lisbon"
    assert record.validity.t_start == D(2020, 1, 1)
    assert record.validity.t_end is None
    assert record.epistemic.status is Status.ACTIVE
    assert record.provenance.evidence[0].doc_id == "d0"


def test_counts_dict_has_fixed_keys():
    engine = make_engine()
    report = ingest_documents(engine, [])
    assert tuple(report.counts) == COUNT_KEYS
    counts_of(report)


def test_restatement_merges_evidence():
    engine = make_engine()
    report = ingest_documents(
        engine,
        [
            doc("d0", D(2020, 1, 1), "Acme Corp is headquartered in Lisbon."),
            doc("d1", D(2020, 3, 1), "Acme Corp is headquartered in Lisbon."),
        ],
    )
    counts_of(report, documents=2, candidates=2, inserted=1, merged=1)
    (record,) = engine.all_records()
    assert len(record.provenance.evidence) == 2
    assert record.epistemic.confidence == pytest.approx(0.6)
    assert {e.doc_id for e in record.provenance.evidence} == {"d0", "d1"}


def test_dated_succession_coexists():
    engine = make_engine()
    report = ingest_documents(
        engine,
        [
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
        ],
    )
    counts_of(report, documents=2, candidates=2, inserted=2)
    recs = by_object(engine)
    assert recs["lisbon"].validity.t_end == D(2020, 1, 1)
    assert recs["porto"].validity.t_start == D(2020, 1, 1)
    assert all(r.epistemic.status is Status.ACTIVE for r in recs.values())


def test_dateless_conflict_contests_both():
    engine = make_engine()
    report = ingest_documents(
        engine,
        [
            doc("d0", D(2019, 6, 1), "Acme Corp is headquartered in Lisbon."),
            doc("d1", D(2021, 2, 1), "Acme Corp is headquartered in Porto."),
        ],
    )
    counts_of(report, documents=2, candidates=2, inserted=2, contested=2)
    recs = by_object(engine)
    assert recs["lisbon"].epistemic.status is Status.CONTESTED
    assert recs["porto"].epistemic.status is Status.CONTESTED
    open_items = engine.review_items(open_only=True)
    assert {i.nugget_id for i in open_items} == {r.id for r in recs.values()}


def test_third_source_resolves_dispute():
    engine = make_engine()
    report = ingest_documents(
        engine,
        [
            doc("d0", D(2019, 6, 1), "Acme Corp is headquartered in Lisbon."),
            doc(
                "w1",
                D(2021, 6, 1),
                "Since June 1, 2021, Acme Corp has been headquartered in Porto.",
            ),
            doc(
                "w2",
                D(2021, 6, 2),
                "Since June 1, 2021, Acme Corp has been headquartered in Porto.",
            ),
            doc(
                "w3",
                D(2021, 6, 3),
                "Since June 1, 2021, Acme Corp has been headquartered in Porto.",
            ),
        ],
    )
    counts_of(
        report,
        documents=4,
        candidates=4,
        inserted=2,
        merged=2,
        contested=2,
        deprecated=1,
    )
    recs = by_object(engine)
    assert recs["porto"].epistemic.status is Status.ACTIVE
    assert recs["porto"].epistemic.confidence == pytest.approx(0.7)
    assert recs["lisbon"].epistemic.status is Status.DEPRECATED
    assert recs["lisbon"].validity.t_end == D(2021, 6, 1)
    assert engine.review_items(open_only=True) == []


def test_two_source_dispute_stays_contested():
    engine = make_engine()
    ingest_documents(
        engine,
        [
            doc("d0", D(2019, 6, 1), "Acme Corp is headquartered in Lisbon."),
            doc(
                "w1",
                D(2021, 6, 1),
                "Since June 1, 2021, Acme Corp has been headquartered in Porto.",
            ),
            doc(
                "w2",
                D(2021, 6, 2),
                "Since June 1, 2021, Acme Corp has been headquartered in Porto.",
            ),
        ],
    )
    recs = by_object(engine)
    # two against one is not enough for automatic resolution
    assert recs["porto"].epistemic.status is Status.CONTESTED
    assert recs["lisbon"].epistemic.status is Status.CONTESTED
    # but the retro pass still closes the older open interval
    assert recs["lisbon"].validity.t_end == D(2021, 6, 1)


def test_revision_drop_closes_interval():
    engine = make_engine()
    report = ingest_documents(
        engine,
        [
            doc(
                "n5",
                D(2020, 1, 1),
                "Acme Corp is headquartered in Lisbon. Markets stayed calm.",
            ),
            doc("n5b", D(2021, 3, 1), "Markets stayed calm.", revision_of="n5"),
        ],
    )
    counts_of(report, documents=2, candidates=1, inserted=1)
    (record,) = engine.all_records()
    assert record.validity.t_start == D(2020, 1, 1)
    assert record.validity.t_end == D(2021, 3, 1)
    assert record.validity.end_inferred


def test_unmapped_predicate_quarantined(tmp_path):
    engine = make_engine()
    qpath = tmp_path / "quarantine.jsonl"
    report = ingest_documents(
        engine,
        [doc("d0", D(2020, 1, 1), "Nordic Group is partnered with Vexline Ltd.")],
        quarantine_path=qpath,
    )
    counts_of(report, documents=1, candidates=1, quarantined=1)
    assert engine.all_records() == []
    rows = [json.loads(line) for line in qpath.read_text().splitlines()]
    assert len(rows) == 1
    assert rows[0]["error"] == "unmapped_predicate"
    assert rows[0]["fact"]["subject_raw"] == "Nordic Group"


def test_degenerate_interval_quarantined(tmp_path):
    engine = make_engine()
    qpath = tmp_path / "quarantine.jsonl"
    report = ingest_documents(
        engine,
        [
            doc(
                "r0",
                D(2020, 6, 1),
                "Since 2022, Acme Corp has been headquartered in Lisbon. "
                "Markets stayed calm.",
            ),
            doc("r1", D(2021, 3, 1), "Markets stayed calm.", revision_of="r0"),
        ],
        quarantine_path=qpath,
    )
    counts_of(report, documents=2, candidates=1, quarantined=1)
    rows = [json.loads(line) for line in qpath.read_text().splitlines()]
    assert rows[0]["error"].startswith("degenerate_interval")


def test_quarantine_file_appends_across_batches(tmp_path):
    engine = make_engine()
    qpath = tmp_path / "quarantine.jsonl"
    bad = "Nordic Group is partnered with Vexline Ltd."
    ingest_documents(engine, [doc("d0", D(2020, 1, 1), bad)], quarantine_path=qpath)
    ingest_documents(engine, [doc("d1", D(2020, 2, 1), bad)], quarantine_path=qpath)
    assert len(qpath.read_text().splitlines()) == 2


def test_documents_processed_in_time_order():
    engine = make_engine()
    # handed to ingest newest first; conflict handling must still see the
    # 2019 fact before the 2021 one
    report = ingest_documents(
        engine,
        [
            doc("late", D(2021, 2, 1), "Acme Corp is headquartered in Porto."),
            doc("early", D(2019, 6, 1), "Acme Corp is headquartered in Lisbon."),
        ],
    )
    counts_of(report, documents=2, candidates=2, inserted=2, contested=2)
    recs = by_object(engine)
    assert recs["lisbon"].validity.t_start == D(2019, 6, 1)
    assert recs["porto"].validity.t_start == D(2021, 2, 1)
