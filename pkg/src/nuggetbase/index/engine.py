"""Engine facade: record store plus metadata, sparse, and dense indexes.

Concurrency model: one re-entrant lock serializes every public operation.
Writes are batched and cheap, queries are sub-millisecond, so a single
lock gives the atomic-commit guarantee (readers see pre- or post-outcome
state, never intermediates) without snapshot machinery. All mutation
funnels through the governance choke points, so every status or end-date
change lands in the audit log.
"""
from __future__ import annotations

import json
import logging
import threading
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from ..canonicalize import MULTI_VALUED, Schema
from ..config import Config
from ..dates import format_date
from ..governance import (
    AuditRow,
    Decision,
    IntegrationOutcome,
    ReviewItem,
    apply_review_decision,
    integrate,
)
from ..model import (
    NuggetKey,
    NuggetRecord,
    Status,
    View,
    record_to_json,
)
from .dense import DenseIndex, HashedTrigramEmbedder
from .metadata import MetadataIndex
from .sparse import Bm25Index, tokenize
from .storage import RecordStore

logger = logging.getLogger(__name__)


class NuggetEngine:
    """Single-writer governed index over one record store."""

    def __init__(
        self,
        store: Optional[RecordStore] = None,
        schema: Optional[Schema] = None,
        config: Optional[Config] = None,
        directory: Optional[str | Path] = None,
    ):
        self.config = config or Config()
        self.schema = schema or Schema([])
        self.directory = Path(directory) if directory else None
        if store is None:
            if self.directory:
                self.directory.mkdir(parents=True, exist_ok=True)
                store = RecordStore(self.directory / "store.db")
            else:
                store = RecordStore(":memory:")
        self.store = store
        self.hot_threshold = self.config.hot_threshold

        self._lock = threading.RLock()
        self._records: dict[str, NuggetRecord] = {}
        self._handles: dict[str, int] = {}
        self._ids: list[str] = []
        self._id_ranks_np: Optional[np.ndarray] = None
        self._by_key: dict[NuggetKey, list[str]] = {}
        self._chain_root: dict[str, str] = {}
        self._meta = MetadataIndex()
        self._sparse = Bm25Index(k1=self.config.bm25.k1, b=self.config.bm25.b)
        self._dense: Optional[DenseIndex] = None
        if self.config.dense.enabled:
            self._dense = DenseIndex(
                embedder=HashedTrigramEmbedder(self.config.dense.dim),
                m=self.config.hnsw.m,
                ef_construction=self.config.hnsw.ef_construction,
                ef_search=self.config.hnsw.ef_search,
                seed=self.config.seed,
            )
        self._reviews: dict[tuple[str, str], ReviewItem] = {}
        self._audit_rows: list[AuditRow] = []
        self._audit_file = None
        if self.directory:
            self._audit_file = open(self.directory / "audit.jsonl", "a", encoding="utf-8")
        self._dirty: set[str] = set()
        self._dirty_reviews: set[tuple[str, str]] = set()
        self._load()

    # --- loading -----------------------------------------------------------

    def _load(self) -> None:
        for record in self.store.scan():
            self._attach(record)
        for nugget_id, reason, queued_at, resolved in self.store.scan_reviews():
            self._reviews[(nugget_id, reason)] = ReviewItem(
                nugget_id, reason, queued_at, resolved
            )
        roots = self.store.get_meta("chain_roots")
        if roots:
            self._chain_root = json.loads(roots)

    def _attach(self, record: NuggetRecord) -> None:
        handle = len(self._ids)
        self._records[record.id] = record
        self._handles[record.id] = handle
        self._ids.append(record.id)
        self._by_key.setdefault(record.key, []).append(record.id)
        self._meta.add(
            record.validity.t_start,
            record.validity.t_end,
            record.epistemic.status,
            str(record.validity.scope),
        )
        self._sparse.add(handle, record.text)
        if self._dense is not None:
            self._dense.add(handle, record.text)

    # --- governance store protocol ----------------------------------------

    def records_for_key(self, key: NuggetKey) -> list[NuggetRecord]:
        with self._lock:
            return [self._records[i] for i in self._by_key.get(key, ())]

    def evidence_count(self, record: NuggetRecord) -> int:
        roots = {
            self._chain_root.get(ev.doc_id, ev.doc_id)
            for ev in record.provenance.evidence
        }
        return len(roots)

    def get_record(self, nugget_id: str) -> Optional[NuggetRecord]:
        with self._lock:
            return self._records.get(nugget_id)

    def insert_record(self, record: NuggetRecord) -> None:
        with self._lock:
            if record.id in self._records:
                raise ValueError(f"duplicate insert: {record.id}")
            self._attach(record)
            self._dirty.add(record.id)

    def replace_record(self, record: NuggetRecord) -> None:
        with self._lock:
            old = self._records.get(record.id)
            if old is None:
                raise KeyError(record.id)
            self._records[record.id] = record
            self._meta.update(
                self._handles[record.id],
                record.validity.t_end,
                record.epistemic.status,
            )
            self._dirty.add(record.id)

    def is_multi_valued(self, predicate: str) -> bool:
        entry = self.schema.get(predicate)
        return entry is not None and entry.cardinality == MULTI_VALUED

    def append_audit(self, row: AuditRow) -> None:
        self._audit_rows.append(row)
        if self._audit_file is not None:
            self._audit_file.write(json.dumps(row.to_dict(), ensure_ascii=False) + "\n")

    def queue_review(self, nugget_id: str, reason: str, queued_at: date) -> None:
        key = (nugget_id, reason)
        item = self._reviews.get(key)
        if item is not None and not item.resolved:
            return
        self._reviews[key] = ReviewItem(nugget_id, reason, queued_at, resolved=False)
        self._dirty_reviews.add(key)

    def resolve_review(self, nugget_id: str, reason: Optional[str] = None) -> None:
        for (nid, rsn), item in list(self._reviews.items()):
            if nid != nugget_id or item.resolved:
                continue
            if reason is not None and rsn != reason:
                continue
            self._reviews[(nid, rsn)] = ReviewItem(nid, rsn, item.queued_at, resolved=True)
            self._dirty_reviews.add((nid, rsn))

    def has_open_review(self, nugget_id: str, reason: Optional[str] = None) -> bool:
        for (nid, rsn), item in self._reviews.items():
            if nid == nugget_id and not item.resolved:
                if reason is None or rsn == reason:
                    return True
        return False

    # --- public API --------------------------------------------------------

    def register_documents(self, docs: Iterable) -> None:
        """Record revision chains so evidence independence can be computed."""
        with self._lock:
            for doc in docs:
                if doc.revision_of:
                    root = self._chain_root.get(doc.revision_of, doc.revision_of)
                    self._chain_root[doc.doc_id] = root

    def chain_for(self, doc_id: str) -> str:
        return self._chain_root.get(doc_id, doc_id)

    def upsert(self, record: NuggetRecord, now: Optional[date] = None) -> IntegrationOutcome:
        with self._lock:
            return integrate(record, self, now=now)

    def tighten_end(
        self,
        nugget_id: str,
        new_end: date,
        now: date,
        actor: str = "system",
        note: str = "retro refinement",
    ) -> None:
        """Shrink a stored record's end bound, with audit and review flag."""
        from dataclasses import replace as dc_replace

        from ..governance import flag_for_review

        with self._lock:
            old = self._records[nugget_id]
            if old.validity.t_end is not None and old.validity.t_end <= new_end:
                return
            new = dc_replace(
                old,
                validity=dc_replace(old.validity, t_end=new_end, end_inferred=True),
            )
            self.replace_record(new)
            self.append_audit(
                AuditRow(
                    ts=now,
                    actor=actor,
                    nugget_id=nugget_id,
                    from_status=old.epistemic.status,
                    to_status=new.epistemic.status,
                    t_end_change=format_date(new_end),
                    note=note,
                )
            )
            flag_for_review(self, new, now)

    def apply_decision(
        self, nugget_id: str, decision: Decision, now: Optional[date] = None
    ) -> IntegrationOutcome:
        with self._lock:
            outcome = apply_review_decision(self, nugget_id, decision, now=now)
            self.commit()
            return outcome

    def _valid_mask(
        self,
        t: date,
        view: View,
        scope_strs: Optional[set[str]] = None,
        ignore_validity: bool = False,
    ) -> np.ndarray:
        return self._meta.mask(t, view, scope_strs, ignore_validity)

    def filter_valid(
        self, t: date, view: View = View.ACTIVE, scope_strs: Optional[set[str]] = None
    ) -> set[str]:
        """Ids of records retrievable at time t under the view."""
        with self._lock:
            mask = self._valid_mask(t, view, scope_strs)
            return {self._ids[h] for h in np.nonzero(mask)[0]}

    def _mask_from_ids(self, candidate_ids: Iterable[str]) -> np.ndarray:
        mask = np.zeros(len(self._ids), dtype=bool)
        for nugget_id in candidate_ids:
            h = self._handles.get(nugget_id)
            if h is not None:
                mask[h] = True
        return mask

    def bm25_search(
        self,
        query: str | Sequence[str],
        candidate_ids: Optional[Iterable[str]] = None,
        k: int = 20,
    ) -> list[tuple[str, float]]:
        """Top-k (nugget_id, BM25 score); ties break on ascending id."""
        with self._lock:
            mask = None if candidate_ids is None else self._mask_from_ids(candidate_ids)
            return self.bm25_search_masked(query, mask, k)

    def _id_ranks(self) -> np.ndarray:
        """Position of each handle's id in ascending id order.

        Lets tie-breaking compare ints instead of id strings. Handles only
        append, so a length check is enough to invalidate the cache.
        """
        if self._id_ranks_np is None or len(self._id_ranks_np) != len(self._ids):
            order = np.argsort(np.array(self._ids, dtype=np.str_))
            ranks = np.empty(order.size, dtype=np.int64)
            ranks[order] = np.arange(order.size)
            self._id_ranks_np = ranks
        return self._id_ranks_np

    def bm25_search_masked(
        self,
        query: str | Sequence[str],
        mask: Optional[np.ndarray],
        k: int = 20,
    ) -> list[tuple[str, float]]:
        """Mask-addressed variant used on the hot query path."""
        terms = tokenize(query) if isinstance(query, str) else list(query)
        with self._lock:
            handles, vals = self._sparse.search_arrays(terms, mask)
            if handles.size > k:
                # Common query terms can put tens of thousands of rows in a
                # score tie; resolve the (-score, id) cut in numpy instead of
                # sorting the whole candidate list.
                kth = np.partition(vals, vals.size - k)[vals.size - k]
                above = vals > kth
                parts_h = [handles[above]]
                parts_v = [vals[above]]
                need = k - int(above.sum())
                tied = handles[vals == kth]
                if tied.size > need:
                    tied_ranks = self._id_ranks()[tied]
                    tied = tied[np.argpartition(tied_ranks, need - 1)[:need]]
                parts_h.append(tied)
                parts_v.append(np.full(tied.size, kth))
                handles = np.concatenate(parts_h)
                vals = np.concatenate(parts_v)
            scored = [(self._ids[int(h)], float(s)) for h, s in zip(handles, vals)]
        scored.sort(key=lambda t: (-t[1], t[0]))
        return scored[:k]

    def dense_search(
        self,
        query_vector: np.ndarray,
        candidate_ids: Optional[Iterable[str]] = None,
        k: int = 20,
    ) -> list[tuple[str, float]]:
        """Top-k (nugget_id, cosine similarity) over the candidate set."""
        with self._lock:
            mask = None if candidate_ids is None else self._mask_from_ids(candidate_ids)
            return self.dense_search_masked(query_vector, mask, k)

    def dense_search_masked(
        self,
        query_vector: np.ndarray,
        mask: Optional[np.ndarray],
        k: int = 20,
    ) -> list[tuple[str, float]]:
        if self._dense is None:
            raise RuntimeError("dense index is disabled in this configuration")
        with self._lock:
            hits = self._dense.search(np.asarray(query_vector, dtype=np.float64), k, mask)
            scored = [(self._ids[h], s) for h, s in hits]
        scored.sort(key=lambda t: (-t[1], t[0]))
        return scored[:k]

    def increment_access(self, nugget_ids: Iterable[str]) -> None:
        from dataclasses import replace as dc_replace

        with self._lock:
            for nugget_id in nugget_ids:
                rec = self._records.get(nugget_id)
                if rec is not None:
                    self._records[nugget_id] = dc_replace(
                        rec, access_count=rec.access_count + 1
                    )
                    self._dirty.add(nugget_id)

    def review_items(self, open_only: bool = True) -> list[ReviewItem]:
        with self._lock:
            items = sorted(
                self._reviews.values(),
                key=lambda i: (i.queued_at, i.nugget_id, i.reason),
            )
            if open_only:
                items = [i for i in items if not i.resolved]
            return items

    def contested_queue(self, limit: int = 50) -> list[dict]:
        """Open review items with their records and same-key rivals."""
        with self._lock:
            out = []
            for item in self.review_items(open_only=True):
                record = self._records.get(item.nugget_id)
                if record is None:
                    continue
                rivals = [
                    r
                    for r in self.records_for_key(record.key)
                    if r.id != record.id
                ]
                out.append({"item": item, "record": record, "rivals": rivals})
                if len(out) >= limit:
                    break
            return out

    def all_records(self) -> list[NuggetRecord]:
        with self._lock:
            return [self._records[i] for i in self._ids]

    def audit_rows(self, nugget_id: Optional[str] = None) -> list[AuditRow]:
        """Status-change history, optionally filtered to one record."""
        with self._lock:
            if nugget_id is None:
                return list(self._audit_rows)
            return [r for r in self._audit_rows if r.nugget_id == nugget_id]

    def export_jsonl(self) -> Iterator[str]:
        for record in self.all_records():
            yield record_to_json(record)

    def stats(self) -> dict:
        with self._lock:
            counts = {status.value: 0 for status in Status}
            for record in self._records.values():
                counts[record.epistemic.status.value] += 1
            open_reviews = sum(1 for i in self._reviews.values() if not i.resolved)
            return {
                "records": len(self._records),
                "by_status": counts,
                "open_reviews": open_reviews,
                "store_bytes": self.store.file_size(),
                "dense_enabled": self._dense is not None,
            }

    def commit(self) -> None:
        """Flush dirty records and review rows; durable once this returns."""
        with self._lock:
            try:
                for nugget_id in self._dirty:
                    self.store.put(self._records[nugget_id])
                for key in self._dirty_reviews:
                    item = self._reviews[key]
                    self.store.put_review(
                        item.nugget_id, item.reason, item.queued_at, item.resolved
                    )
                if self._chain_root:
                    self.store.set_meta("chain_roots", json.dumps(self._chain_root))
                self.store.commit()
            except Exception:
                self.store.rollback()
                raise
            self._dirty.clear()
            self._dirty_reviews.clear()
            if self._audit_file is not None:
                self._audit_file.flush()

    def close(self) -> None:
        with self._lock:
            if self._audit_file is not None:
                self._audit_file.close()
                self._audit_file = None
            self.store.close()

    @property
    def embedder(self):
        if self._dense is not None:
            return self._dense.embedder
        return HashedTrigramEmbedder(self.config.dense.dim)

    @property
    def dense_enabled(self) -> bool:
        return self._dense is not None

    @property
    def lock(self) -> threading.RLock:
        return self._lock
