"""Conflict detection, lifecycle state assignment, and review workflow.

A new record either merges into a value-equivalent sibling, coexists as
succession, supersedes or is superseded on an evidence-count rule, or
lands in a contested pair. Every status or end-date change is recorded in
the returned outcome and in the audit log; nothing mutates silently.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Optional, Protocol, Sequence

from .dates import format_date, overlaps
from .model import (
    NuggetKey,
    NuggetRecord,
    Rank,
    Status,
    merged_confidence,
    with_status,
)

logger = logging.getLogger(__name__)

JACCARD_MERGE = 0.85
RESOLVE_MIN_EVIDENCE = 3

REASON_CONTESTED = "contested"
REASON_HOT_CHANGE = "high_traffic_change"

DECISION_ACTIONS = ("confirm_active", "deprecate", "mark_preferred", "resolve_to")


class NotFoundError(KeyError):
    pass


class ReviewConflictError(RuntimeError):
    """Decision targets a review item that is not open."""


class InvalidDecisionError(ValueError):
    pass


def _grams(s: str) -> set[str]:
    return {s[i : i + 3] for i in range(len(s) - 2)}


def jaccard_value_similarity(a: str, b: str) -> float:
    """Character 3-gram set Jaccard of case-folded, space-collapsed strings.

    Inputs shorter than 3 chars fall back to whole-string equality.
    """
    a = " ".join(a.casefold().split())
    b = " ".join(b.casefold().split())
    if len(a) < 3 or len(b) < 3:
        return 1.0 if a == b else 0.0
    ga, gb = _grams(a), _grams(b)
    return len(ga & gb) / len(ga | gb)


@dataclass(frozen=True)
class AuditRow:
    ts: date
    actor: str
    nugget_id: str
    from_status: Status
    to_status: Status
    t_end_change: Optional[str] = None
    note: Optional[str] = None

    def to_dict(self) -> dict:
        row = {
            "ts": self.ts.isoformat(),
            "actor": self.actor,
            "nugget_id": self.nugget_id,
            "from_status": self.from_status.value,
            "to_status": self.to_status.value,
        }
        if self.t_end_change is not None:
            row["t_end_change"] = self.t_end_change
        if self.note is not None:
            row["note"] = self.note
        return row


@dataclass(frozen=True)
class ReviewItem:
    nugget_id: str
    reason: str
    queued_at: date
    resolved: bool = False


@dataclass(frozen=True)
class AffectedRecord:
    nugget_id: str
    status: Status
    t_end: Optional[date]


@dataclass
class IntegrationOutcome:
    action: str
    nugget_id: str
    affected: list[AffectedRecord] = field(default_factory=list)
    note: Optional[str] = None


class GovernanceStore(Protocol):
    """Mutation surface the lifecycle logic runs against.

    The index engine implements this; tests may use a lightweight fake.
    Implementations must funnel calls through a single writer.
    """

    hot_threshold: int

    def records_for_key(self, key: NuggetKey) -> Sequence[NuggetRecord]: ...

    def evidence_count(self, record: NuggetRecord) -> int: ...

    def get_record(self, nugget_id: str) -> Optional[NuggetRecord]: ...

    def insert_record(self, record: NuggetRecord) -> None: ...

    def replace_record(self, record: NuggetRecord) -> None: ...

    def is_multi_valued(self, predicate: str) -> bool: ...

    def append_audit(self, row: AuditRow) -> None: ...

    def queue_review(self, nugget_id: str, reason: str, queued_at: date) -> None: ...

    def resolve_review(self, nugget_id: str, reason: Optional[str] = None) -> None: ...

    def has_open_review(self, nugget_id: str, reason: Optional[str] = None) -> bool: ...


def flag_for_review(
    store: GovernanceStore, record: NuggetRecord, now: date
) -> Optional[ReviewItem]:
    """Queue the record for human review when its change warrants one."""
    if record.epistemic.status is Status.CONTESTED:
        store.queue_review(record.id, REASON_CONTESTED, now)
        return ReviewItem(record.id, REASON_CONTESTED, now)
    if record.access_count >= store.hot_threshold:
        store.queue_review(record.id, REASON_HOT_CHANGE, now)
        return ReviewItem(record.id, REASON_HOT_CHANGE, now)
    return None


def _apply(
    store: GovernanceStore,
    old: NuggetRecord,
    new: NuggetRecord,
    *,
    actor: str,
    now: date,
    note: Optional[str],
    affected: list[AffectedRecord],
) -> None:
    """Single choke point for mutations: replace, audit, flag."""
    store.replace_record(new)
    status_changed = old.epistemic.status is not new.epistemic.status
    end_changed = old.validity.t_end != new.validity.t_end
    if status_changed or end_changed:
        store.append_audit(
            AuditRow(
                ts=now,
                actor=actor,
                nugget_id=new.id,
                from_status=old.epistemic.status,
                to_status=new.epistemic.status,
                t_end_change=format_date(new.validity.t_end) if end_changed else None,
                note=note,
            )
        )
        affected.append(
            AffectedRecord(new.id, new.epistemic.status, new.validity.t_end)
        )
        flag_for_review(store, new, now)


def _insert(
    store: GovernanceStore,
    record: NuggetRecord,
    final_status: Status,
    t_end: Optional[date],
    *,
    actor: str,
    now: date,
    note: Optional[str],
    affected: list[AffectedRecord],
) -> NuggetRecord:
    """Insert the candidate in its final state, auditing any divergence
    from the Active shape it arrived in."""
    new = record
    if t_end != record.validity.t_end:
        new = replace(new, validity=replace(new.validity, t_end=t_end, end_inferred=True))
    if final_status is not Status.ACTIVE or new is not record:
        new = with_status(new, final_status)
    store.insert_record(new)
    affected.append(AffectedRecord(new.id, new.epistemic.status, new.validity.t_end))
    if final_status is not Status.ACTIVE:
        store.append_audit(
            AuditRow(
                ts=now,
                actor=actor,
                nugget_id=new.id,
                from_status=record.epistemic.status,
                to_status=final_status,
                t_end_change=format_date(t_end) if t_end != record.validity.t_end else None,
                note=note,
            )
        )
        flag_for_review(store, new, now)
    return new


def _scan_order(records: Sequence[NuggetRecord]) -> list[NuggetRecord]:
    return sorted(records, key=lambda n: (n.validity.t_start, n.id))


def integrate(
    record: NuggetRecord,
    store: GovernanceStore,
    now: Optional[date] = None,
    actor: str = "system",
) -> IntegrationOutcome:
    """Place a freshly built record into the store under the conflict rules.

    Dedup first: the earliest key-sharing record whose object value clears
    the Jaccard merge bar absorbs the evidence. Otherwise succession and
    multi-valued relations coexist; overlapping functional conflicts are
    settled by independent-evidence counts, with ambiguity landing both
    sides in Contested.
    """
    now = now or record.provenance.created_at
    affected: list[AffectedRecord] = []
    existing = _scan_order(store.records_for_key(record.key))

    if not existing:
        store.insert_record(record)
        affected.append(
            AffectedRecord(record.id, record.epistemic.status, record.validity.t_end)
        )
        return IntegrationOutcome("inserted_active", record.id, affected)

    for n in existing:
        if jaccard_value_similarity(n.fact.object_norm, record.fact.object_norm) >= JACCARD_MERGE:
            evidence = n.provenance.evidence + record.provenance.evidence
            merged = replace(
                n,
                provenance=replace(n.provenance, evidence=evidence),
                epistemic=replace(
                    n.epistemic, confidence=merged_confidence(len(evidence))
                ),
            )
            store.replace_record(merged)
            affected.append(
                AffectedRecord(merged.id, merged.epistemic.status, merged.validity.t_end)
            )
            outcome = IntegrationOutcome("merged_evidence", merged.id, affected)
            if merged.epistemic.status is Status.CONTESTED:
                resolution = resolve_contested(record.key, store, now=now, actor=actor)
                outcome.affected.extend(resolution.affected)
            return outcome

    overlapping = [
        n
        for n in existing
        if overlaps(
            n.validity.t_start,
            n.validity.t_end,
            record.validity.t_start,
            record.validity.t_end,
        )
    ]
    if not overlapping or store.is_multi_valued(record.key.predicate):
        store.insert_record(record)
        affected.append(
            AffectedRecord(record.id, record.epistemic.status, record.validity.t_end)
        )
        return IntegrationOutcome("inserted_succession", record.id, affected)

    cand_ev = store.evidence_count(record)
    cand_status = Status.ACTIVE
    cand_t_end = record.validity.t_end
    saw_contested = False
    deprecated_existing = False
    for n in overlapping:
        n_ev = store.evidence_count(n)
        both_heavy = cand_ev >= 2 and n_ev >= 2
        if (
            not both_heavy
            and cand_ev >= 2
            and record.validity.t_start > n.validity.t_start
        ):
            new = with_status(n, Status.DEPRECATED, t_end=record.validity.t_start, keep_end=False)
            _apply(store, n, new, actor=actor, now=now, note="superseded", affected=affected)
            cand_status = Status.ACTIVE
            deprecated_existing = True
        elif (
            not both_heavy
            and n_ev >= 2
            and n.validity.t_start > record.validity.t_start
        ):
            cand_status = Status.DEPRECATED
            cand_t_end = n.validity.t_start
        else:
            if n.epistemic.status is not Status.CONTESTED:
                new = with_status(n, Status.CONTESTED)
                _apply(store, n, new, actor=actor, now=now, note="conflict", affected=affected)
            else:
                flag_for_review(store, n, now)
            cand_status = Status.CONTESTED
            saw_contested = True

    inserted = _insert(
        store,
        record,
        cand_status,
        cand_t_end,
        actor=actor,
        now=now,
        note="conflict" if cand_status is Status.CONTESTED else "superseded",
        affected=affected,
    )
    if saw_contested or cand_status is Status.CONTESTED:
        action = "contested_both"
    elif cand_status is Status.DEPRECATED:
        action = "deprecated_candidate"
    elif deprecated_existing:
        action = "deprecated_existing"
    else:
        action = "inserted_succession"
    return IntegrationOutcome(action, inserted.id, affected)


def resolve_contested(
    key: NuggetKey,
    store: GovernanceStore,
    now: Optional[date] = None,
    actor: str = "system",
) -> IntegrationOutcome:
    """Promote a clear evidence winner out of a contested group, if any.

    The winner must hold at least three independent evidences and strictly
    more than every rival; otherwise nothing changes.
    """
    group = [
        n
        for n in _scan_order(store.records_for_key(key))
        if n.epistemic.status is Status.CONTESTED
    ]
    if len(group) < 2:
        return IntegrationOutcome("no_change", "", [])
    counts = {n.id: store.evidence_count(n) for n in group}
    eligible = [n for n in group if counts[n.id] >= RESOLVE_MIN_EVIDENCE]
    if len(eligible) != 1:
        return IntegrationOutcome("no_change", "", [])
    winner = eligible[0]
    if any(counts[n.id] >= counts[winner.id] for n in group if n.id != winner.id):
        return IntegrationOutcome("no_change", "", [])

    now = now or winner.provenance.created_at
    affected: list[AffectedRecord] = []
    promoted = with_status(winner, Status.ACTIVE)
    _apply(store, winner, promoted, actor=actor, now=now, note="resolution winner", affected=affected)
    store.resolve_review(winner.id, REASON_CONTESTED)
    for rival in group:
        if rival.id == winner.id:
            continue
        if winner.validity.t_start > rival.validity.t_start:
            new = with_status(
                rival, Status.DEPRECATED, t_end=winner.validity.t_start, keep_end=False
            )
        else:
            new = with_status(rival, Status.DEPRECATED)
        _apply(store, rival, new, actor=actor, now=now, note="resolution loser", affected=affected)
        store.resolve_review(rival.id, REASON_CONTESTED)
    return IntegrationOutcome("resolved_contested", winner.id, affected)


@dataclass(frozen=True)
class Decision:
    action: str
    winner_id: Optional[str] = None
    note: Optional[str] = None
    actor: str = "reviewer"


def apply_review_decision(
    store: GovernanceStore,
    nugget_id: str,
    decision: Decision,
    now: Optional[date] = None,
) -> IntegrationOutcome:
    """Apply a human decision to a queued record.

    Requires an open review item; decisions that conflict with the current
    state (for example deprecating an already Deprecated record) are
    idempotent no-ops recorded with a warning.
    """
    if decision.action not in DECISION_ACTIONS:
        raise InvalidDecisionError(decision.action)
    record = store.get_record(nugget_id)
    if record is None:
        raise NotFoundError(nugget_id)
    if not store.has_open_review(nugget_id):
        raise ReviewConflictError(f"no open review item for {nugget_id}")
    now = now or date.today()
    affected: list[AffectedRecord] = []
    note = decision.note
    warning: Optional[str] = None

    if decision.action == "confirm_active":
        if record.epistemic.status is Status.DEPRECATED:
            warning = "confirm_active on a Deprecated record; no change"
        elif record.epistemic.status is not Status.ACTIVE:
            _apply(
                store,
                record,
                with_status(record, Status.ACTIVE),
                actor=decision.actor,
                now=now,
                note=note or "confirmed active",
                affected=affected,
            )
    elif decision.action == "deprecate":
        if record.epistemic.status is Status.DEPRECATED:
            warning = "record already Deprecated; no change"
        else:
            # End date deliberately untouched on manual deprecation.
            _apply(
                store,
                record,
                with_status(record, Status.DEPRECATED),
                actor=decision.actor,
                now=now,
                note=note or "deprecated by review; t_end unchanged",
                affected=affected,
            )
    elif decision.action == "mark_preferred":
        if record.epistemic.status is Status.DEPRECATED:
            warning = "mark_preferred on a Deprecated record; no change"
        else:
            new = replace(record, epistemic=replace(record.epistemic, rank=Rank.PREFERRED))
            store.replace_record(new)
            store.append_audit(
                AuditRow(
                    ts=now,
                    actor=decision.actor,
                    nugget_id=record.id,
                    from_status=record.epistemic.status,
                    to_status=record.epistemic.status,
                    note=note or "marked preferred",
                )
            )
            affected.append(AffectedRecord(new.id, new.epistemic.status, new.validity.t_end))
    elif decision.action == "resolve_to":
        if not decision.winner_id:
            raise InvalidDecisionError("resolve_to requires winner_id")
        winner = store.get_record(decision.winner_id)
        if winner is None:
            raise NotFoundError(decision.winner_id)
        if winner.epistemic.status is not Status.ACTIVE:
            _apply(
                store,
                winner,
                with_status(winner, Status.ACTIVE),
                actor=decision.actor,
                now=now,
                note=note or "resolved winner",
                affected=affected,
            )
        for rival in _scan_order(store.records_for_key(winner.key)):
            if rival.id == winner.id or rival.epistemic.status is Status.DEPRECATED:
                continue
            if not overlaps(
                rival.validity.t_start,
                rival.validity.t_end,
                winner.validity.t_start,
                winner.validity.t_end,
            ):
                continue
            if winner.validity.t_start > rival.validity.t_start:
                new = with_status(
                    rival, Status.DEPRECATED, t_end=winner.validity.t_start, keep_end=False
                )
            else:
                new = with_status(rival, Status.DEPRECATED)
            _apply(
                store,
                rival,
                new,
                actor=decision.actor,
                now=now,
                note=note or "resolved loser",
                affected=affected,
            )
            store.resolve_review(rival.id)

    if warning:
        logger.warning("%s: %s", nugget_id, warning)
    store.resolve_review(nugget_id)
    # Contested items whose record left the contested state are moot.
    for touched in affected:
        current = store.get_record(touched.nugget_id)
        if current is not None and current.epistemic.status is not Status.CONTESTED:
            store.resolve_review(touched.nugget_id, REASON_CONTESTED)
    return IntegrationOutcome(decision.action, nugget_id, affected, note=warning)
