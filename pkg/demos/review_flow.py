"""Adjudicate a contested pair by hand, engine-level.

The HTTP console does the same thing over /api; this script shows the
underlying decision machinery directly.
"""
from datetime import date

from nuggetbase import (
    Decision,
    Document,
    NuggetEngine,
    PredicateSchema,
    Query,
    Schema,
    View,
    ingest_documents,
    retrieve,
)
from nuggetbase.canonicalize import FUNCTIONAL

# person-first phrasing, org-keyed fact: inverse_aliases swaps the arguments
schema = Schema(
    [
        PredicateSchema(
            canonical_name="chiefExecutive",
            aliases=(),
            subject_type="org",
            object_type="person",
            cardinality=FUNCTIONAL,
            inverse_aliases=("the chief executive of",),
        )
    ]
)
engine = NuggetEngine(schema=schema)

ingest_documents(
    engine,
    [
        Document(doc_id="leak-1", timestamp=date(2024, 3, 1), text="Dana Moss is the chief executive of Vex Ltd."),
        Document(doc_id="leak-2", timestamp=date(2024, 3, 4), text="Aldo Reyes is the chief executive of Vex Ltd."),
    ],
)

queue = engine.contested_queue()
print(f"{len(queue)} contested item(s)")
for entry in queue:
    rec = entry["record"]
    rivals = ", ".join(r.fact.object_norm for r in entry["rivals"])
    print(f"  {rec.id[:10]}  {rec.fact.object_norm:<12} rivals: {rivals}")

# nothing is retrievable under the default view while the dispute is open
blind = retrieve(engine, Query(text="who leads vex ltd", t=date(2024, 4, 1), k=5))
print("active view sees:", [e.record.fact.object_norm for e in blind.entries])

# a reviewer checks the sources and rules for Reyes
loser = next(e["record"] for e in queue if e["record"].fact.object_norm == "dana moss")
winner_id = next(e["record"].id for e in queue if e["record"].fact.object_norm == "aldo reyes")
outcome = engine.apply_decision(
    loser.id,
    Decision(action="resolve_to", winner_id=winner_id, note="press release 2024-03-04 is the primary source"),
)
print("decision:", outcome.action)

after = retrieve(engine, Query(text="who leads vex ltd", t=date(2024, 4, 1), k=5))
print("active view sees:", [e.record.fact.object_norm for e in after.entries])
print("open reviews:", len(engine.review_items()))
print("audit trail for the losing record:")
for row in engine.audit_rows(loser.id):
    print("  ", row.to_dict())
