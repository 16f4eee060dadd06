"""Batch ingest: documents in, governed atomic records out.

Stages per document: sentence segmentation, candidate extraction,
canonicalization against the predicate schema, validity inference over the
revision chain and prior index state, then governed integration. A final
pass re-tightens earlier facts against later well-evidenced conflicts,
because batch order means a successor can arrive after its predecessor
was already integrated with an open end.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

from .canonicalize import AliasTable, EMPTY_ALIASES, UnmappedPredicate, canonicalize_candidate
from .dates import format_date
from .extraction import (
    CandidateNugget,
    Document,
    Extractor,
    RuleExtractor,
    extract_document,
)
from .governance import IntegrationOutcome
from .model import (
    EpistemicState,
    Evidence,
    NuggetRecord,
    Provenance,
    Scope,
    Status,
    GLOBAL,
    compute_nugget_id,
)
from .validity import DegenerateIntervalError, infer_validity

logger = logging.getLogger(__name__)

COUNT_KEYS = (
    "documents",
    "candidates",
    "inserted",
    "merged",
    "deprecated",
    "contested",
    "quarantined",
)


@dataclass
class IngestReport:
    counts: dict[str, int] = field(
        default_factory=lambda: {k: 0 for k in COUNT_KEYS}
    )
    outcomes: list[IntegrationOutcome] = field(default_factory=list)
    quarantined: list[dict] = field(default_factory=list)


def _quarantine_row(
    candidate: CandidateNugget, error: str, canon=None, interval=None
) -> dict:
    """Nugget-shaped JSON row for the side file, plus the error cause."""
    fact = {
        "subject_raw": candidate.subject_raw,
        "subject_norm": canon.fact.subject_norm if canon else "",
        "predicate": canon.fact.predicate if canon else candidate.predicate_raw,
        "object_raw": candidate.object_raw,
        "object_norm": canon.fact.object_norm if canon else "",
    }
    validity = {
        "t_start": interval[0].isoformat() if interval else None,
        "t_end": format_date(interval[1]) if interval else None,
        "scope": "global",
    }
    return {
        "id": "",
        "kind": (canon.kind if canon else candidate.kind_hint).value,
        "fact": fact,
        "text": candidate.text,
        "validity": validity,
        "provenance": {
            "evidence": [
                {
                    "doc_id": candidate.doc_id,
                    "span_start": candidate.span_start,
                    "span_end": candidate.span_end,
                    "doc_time": candidate.doc_time.isoformat(),
                }
            ]
        },
        "error": error,
    }


def build_record(
    canon,
    interval,
    doc: Document,
    extractor_id: str,
) -> NuggetRecord:
    cand = canon.candidate
    evidence = Evidence(
        doc_id=doc.doc_id,
        span_start=cand.span_start,
        span_end=cand.span_end,
        doc_time=doc.timestamp,
        revision_id=doc.doc_id if doc.revision_of else None,
        source_type=doc.source_type,
    )
    nugget_id = compute_nugget_id(canon.kind, canon.fact, interval.scope, interval.t_start)
    return NuggetRecord(
        id=nugget_id,
        kind=canon.kind,
        fact=canon.fact,
        text=cand.text,
        validity=interval,
        epistemic=EpistemicState(),
        provenance=Provenance(
            evidence=(evidence,),
            created_at=doc.timestamp,
            extractor_id=extractor_id,
        ),
    )


def ingest_documents(
    engine,
    docs: Sequence[Document],
    extractor: Optional[Extractor] = None,
    aliases: AliasTable = EMPTY_ALIASES,
    scope: Scope = GLOBAL,
    quarantine_path: Optional[str | Path] = None,
) -> IngestReport:
    """Run the full ingest over a document batch and commit the result."""
    extractor = extractor or RuleExtractor()
    extractor_id = getattr(extractor, "extractor_id", extractor.__class__.__name__)
    report = IngestReport()
    ordered = sorted(docs, key=lambda d: (d.timestamp, d.doc_id))

    with engine.lock:
        engine.register_documents(ordered)
        chains: dict[str, list[Document]] = {}
        for doc in ordered:
            chains.setdefault(engine.chain_for(doc.doc_id), []).append(doc)

        for doc in ordered:
            report.counts["documents"] += 1
            history = chains.get(engine.chain_for(doc.doc_id), [doc])
            for candidate in extract_document(doc, extractor):
                report.counts["candidates"] += 1
                try:
                    canon = canonicalize_candidate(
                        candidate, engine.schema, aliases, scope
                    )
                except UnmappedPredicate:
                    report.counts["quarantined"] += 1
                    report.quarantined.append(
                        _quarantine_row(candidate, "unmapped_predicate")
                    )
                    continue
                try:
                    interval = infer_validity(
                        canon, doc, history, engine, engine.schema, scope
                    )
                except DegenerateIntervalError as exc:
                    report.counts["quarantined"] += 1
                    report.quarantined.append(
                        _quarantine_row(candidate, f"degenerate_interval: {exc}", canon)
                    )
                    continue
                record = build_record(canon, interval, doc, extractor_id)
                outcome = engine.upsert(record, now=doc.timestamp)
                report.outcomes.append(outcome)
                _count_outcome(report.counts, outcome)

        if ordered:
            _retro_refine(engine, now=ordered[-1].timestamp)
        engine.commit()

    if quarantine_path and report.quarantined:
        path = Path(quarantine_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            for row in report.quarantined:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return report


def _count_outcome(counts: dict[str, int], outcome: IntegrationOutcome) -> None:
    rows = outcome.affected
    if outcome.action == "merged_evidence":
        counts["merged"] += 1
        # First row restates the merge target's unchanged status.
        rows = rows[1:]
    else:
        counts["inserted"] += 1
    for row in rows:
        if row.status is Status.DEPRECATED:
            counts["deprecated"] += 1
        elif row.status is Status.CONTESTED:
            counts["contested"] += 1


def _retro_refine(engine, now: date) -> None:
    """Re-run conflict tightening so late arrivals close earlier intervals."""
    from .validity import conflict_tightened_end

    for record in engine.all_records():
        if engine.is_multi_valued(record.key.predicate):
            continue
        if record.epistemic.status is Status.DEPRECATED:
            continue
        current = engine.get_record(record.id)
        new_end = conflict_tightened_end(current, engine)
        if new_end is not None and new_end > current.validity.t_start:
            engine.tighten_end(record.id, new_end, now)
