"""Walk one company's headquarters history through the full pipeline.

Run from the repo root:  python3 demos/succession_walkthrough.py
"""
from datetime import date

from nuggetbase import (
    Document,
    NuggetEngine,
    PredicateSchema,
    Query,
    Schema,
    View,
    format_context,
    ingest_documents,
    retrieve,
)
from nuggetbase.canonicalize import FUNCTIONAL

schema = Schema(
    [
        PredicateSchema(
            canonical_name="is headquartered in",
            aliases=("headquartered in", "based in"),
            subject_type="org",
            object_type="location",
            cardinality=FUNCTIONAL,
        )
    ]
)
engine = NuggetEngine(schema=schema)

# Phase 1: two clean filings that describe a succession.
docs = [
    Document(
        doc_id="filing-2019",
        timestamp=date(2019, 6, 3),
        text="From June 1, 2019 to June 1, 2021, Acme Corp was headquartered in Lisbon.",
    ),
    Document(
        doc_id="filing-2021",
        timestamp=date(2021, 6, 2),
        text="Since June 1, 2021, Acme Corp has been headquartered in Porto.",
    ),
]
report = ingest_documents(engine, docs)
print("phase 1 counts:", report.counts)
for rec in sorted(engine.all_records(), key=lambda r: r.validity.t_start):
    v = rec.validity
    print(f"  {rec.fact.object_norm:8s} {v.t_start} .. {v.t_end or 'open'}  {rec.epistemic.status.value}")

# Point-in-time queries against the same store.
for when in (date(2020, 1, 1), date(2022, 1, 1)):
    result = retrieve(engine, Query(text="where is acme corp headquartered", t=when, k=3))
    top = result.entries[0].record
    print(f"asked at {when}: {top.fact.object_norm}")

# Phase 2: two wire reports disagree about a later move. Neither carries a
# date and neither outweighs the other, so integration refuses to guess: the
# newcomers AND the standing Porto record all go Contested and into review.
wires = [
    Document(
        doc_id="wire-a",
        timestamp=date(2023, 2, 1),
        text="Acme Corp is headquartered in Braga.",
    ),
    Document(
        doc_id="wire-b",
        timestamp=date(2023, 2, 3),
        text="Acme Corp is headquartered in Faro.",
    ),
]
print("phase 2 counts:", ingest_documents(engine, wires).counts)
print("open reviews:", [i.nugget_id[:8] for i in engine.review_items()])

disputed = retrieve(
    engine,
    Query(text="where is acme corp headquartered", t=date(2023, 3, 1), k=5, view=View.ACTIVE_PLUS_CONTESTED),
)
print()
print(format_context(disputed.entries, View.ACTIVE_PLUS_CONTESTED, engine))
print()

# Phase 3: two more independent sources corroborate Faro. Once one side of
# the dispute holds 3 independent documents and the other holds 1, the
# stalemate resolves on its own: winner back to Active, loser Deprecated.
corroboration = [
    Document(
        doc_id="wire-c",
        timestamp=date(2023, 2, 10),
        text="Acme Corp is headquartered in Faro.",
    ),
    Document(
        doc_id="wire-d",
        timestamp=date(2023, 2, 12),
        text="Acme Corp is headquartered in Faro.",
    ),
]
print("phase 3 counts:", ingest_documents(engine, corroboration).counts)
print("open reviews after corroboration:", [i.nugget_id[:8] for i in engine.review_items()])
final = retrieve(engine, Query(text="where is acme corp headquartered", t=date(2023, 3, 1), k=3))
print("asked at 2023-03-01:", final.entries[0].record.fact.object_norm)
