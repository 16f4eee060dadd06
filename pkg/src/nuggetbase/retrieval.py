"""Query pipeline: validity filtering, hybrid scoring, fusion, context text."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Optional

from .config import FusionConfig
from .model import (
    RANK_WEIGHT,
    NuggetRecord,
    Scope,
    Status,
    View,
)

DEFAULT_K = 20
MIN_FETCH_DEPTH = 100


@dataclass(frozen=True)
class Query:
    text: str
    t: date
    k: int = DEFAULT_K
    view: View = View.ACTIVE
    scope: Optional[Scope] = None


@dataclass(frozen=True)
class ScoredNugget:
    record: NuggetRecord
    fused: float
    lexical: float
    dense: float
    meta: float


@dataclass
class RetrievalResult:
    query: Query
    entries: list[ScoredNugget] = field(default_factory=list)
    context: str = ""

    @property
    def records(self) -> list[NuggetRecord]:
        return [e.record for e in self.entries]


def fuse_scores(
    lexical: float, dense: float, meta: float, weights: FusionConfig
) -> float:
    """Weighted sum of channel scores already normalized to [0, 1]."""
    return (
        weights.lexical * lexical + weights.dense * dense + weights.meta * meta
    )


def metadata_score(record: NuggetRecord) -> float:
    """Trust prior: evidence-derived confidence scaled by review rank."""
    return record.epistemic.confidence * RANK_WEIGHT[record.epistemic.rank]


def min_max_normalize(scores: dict[str, float]) -> dict[str, float]:
    """Per-query normalization over the fetched pool.

    A degenerate pool (all scores equal, including a single hit) carries no
    ranking signal, so every score maps to 0 rather than an arbitrary 1.
    """
    if not scores:
        return {}
    lo = min(scores.values())
    hi = max(scores.values())
    if hi <= lo:
        return {k: 0.0 for k in scores}
    span = hi - lo
    return {k: (v - lo) / span for k, v in scores.items()}


def fetch_depth(k: int) -> int:
    return max(4 * k, MIN_FETCH_DEPTH)


def retrieve(engine, query: Query, ignore_validity: bool = False) -> RetrievalResult:
    """Run the full pipeline against the engine and format the context.

    ignore_validity drops the time-window test while keeping the status
    rules; it exists for ablation studies, not production paths.
    """
    weights = engine.config.fusion.normalized()
    scope_strs = None
    if query.scope is not None:
        scope_strs = {"global", str(query.scope)}

    with engine.lock:
        mask = engine._valid_mask(query.t, query.view, scope_strs, ignore_validity)
        if not mask.any():
            return RetrievalResult(query=query)
        depth = fetch_depth(query.k)
        lex_hits = dict(engine.bm25_search_masked(query.text, mask, depth))
        dense_hits: dict[str, float] = {}
        if engine.dense_enabled:
            vector = engine.embedder.embed(query.text)
            dense_hits = dict(engine.dense_search_masked(vector, mask, depth))

        lex_norm = min_max_normalize(lex_hits)
        dense_norm = min_max_normalize(dense_hits)
        use_dense = engine.dense_enabled
        if not use_dense:
            weights = weights.lexical_only()

        pool = set(lex_hits) | set(dense_hits)
        entries = []
        for nugget_id in pool:
            record = engine.get_record(nugget_id)
            lex = lex_norm.get(nugget_id, 0.0)
            dns = dense_norm.get(nugget_id, 0.0) if use_dense else 0.0
            meta = metadata_score(record)
            fused = fuse_scores(lex, dns, meta, weights)
            entries.append(ScoredNugget(record, fused, lex, dns, meta))
        entries.sort(key=lambda e: (-e.fused, e.record.id))
        entries = entries[: query.k]
        engine.increment_access([e.record.id for e in entries])

        context = format_context(entries, query.view, engine)
    return RetrievalResult(query=query, entries=entries, context=context)


def _first_source(record: NuggetRecord) -> str:
    evidence = record.provenance.evidence
    return evidence[0].doc_id if evidence else "unknown"


def format_context(entries: list[ScoredNugget], view: View, engine=None) -> str:
    """Render retrieved nuggets as a grounded context block.

    Active nuggets become "Established facts" bullets in rank order. Under
    the wider view, contested nuggets are grouped by key into a separate
    "Disputed" section, one line per disagreement, each value labeled with
    the doc id of its first supporting source.
    """
    if not entries:
        return ""
    active = [e for e in entries if e.record.epistemic.status is Status.ACTIVE]
    contested = [
        e for e in entries if e.record.epistemic.status is Status.CONTESTED
    ]

    lines = ["Established facts:"]
    for entry in active:
        lines.append(f"- {entry.record.text}")

    if view is View.ACTIVE_PLUS_CONTESTED and contested:
        lines.append("")
        lines.append("Disputed (sources disagree):")
        seen_keys = set()
        for entry in contested:
            key = entry.record.key
            if key in seen_keys:
                continue
            seen_keys.add(key)
            rivals = _contested_rivals(entry.record, engine)
            claims = ", ".join(
                f"Source {_first_source(r)} says {r.fact.object_norm}"
                for r in rivals
            )
            lines.append(f"- {entry.record.text}: {claims}")
    return "\n".join(lines)


def _contested_rivals(record: NuggetRecord, engine) -> list[NuggetRecord]:
    """All contested records for the key, in deterministic scan order."""
    if engine is None:
        return [record]
    rivals = [
        r
        for r in engine.records_for_key(record.key)
        if r.epistemic.status is Status.CONTESTED
    ]
    if not rivals:
        rivals = [record]
    rivals.sort(key=lambda r: (r.validity.t_start, r.id))
    return rivals
