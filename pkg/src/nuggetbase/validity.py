"""Validity interval inference for canonicalized candidates.

Three evidence sources, applied in order: temporal expressions in the
statement itself, presence changes across document revisions, and
conflicting same-key records with enough independent evidence. Tightening
is monotone: later stages only shrink the interval.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from typing import Optional, Protocol, Sequence

from .canonicalize import CanonicalCandidate, Schema, fold, FUNCTIONAL
from .dates import earlier, later, next_day, parse_date_string
from .extraction import Document
from .model import NuggetKind, NuggetRecord, ValidityInterval, Scope, GLOBAL

START = "START"
END = "END"
POINT = "POINT"


class DegenerateIntervalError(ValueError):
    """Inference produced an empty window; the candidate is quarantined."""


class KeyQueryable(Protocol):
    def records_for_key(self, key) -> Sequence[NuggetRecord]: ...

    def evidence_count(self, record: NuggetRecord) -> int: ...


_DATE = r"(?:\d{4}-\d{2}-\d{2}|[A-Za-z]+ \d{1,2}, \d{4}|\d{1,2} [A-Za-z]+ \d{4}|\d{4})"

_FROM_TO = re.compile(rf"\bfrom ({_DATE}) to ({_DATE})", re.IGNORECASE)
_TRIGGERED = re.compile(
    rf"\b(since|starting|as of|from|until|through) ({_DATE})", re.IGNORECASE
)
_BARE = re.compile(rf"(?:\b(in|on) )?\b({_DATE})\b", re.IGNORECASE)


def tag_temporal_expressions(text: str) -> list[tuple[date, str]]:
    """Find dated expressions and classify each as START, END, or POINT.

    "from D1 to D2" yields a START/END pair; unpaired "to D" is not an end
    marker. Bare dates and "in/on D" are POINT.
    """
    tags: list[tuple[int, date, str]] = []
    claimed: list[tuple[int, int]] = []

    def overlaps_claimed(s: int, e: int) -> bool:
        return any(s < ce and cs < e for cs, ce in claimed)

    for m in _FROM_TO.finditer(text):
        d1 = parse_date_string(m.group(1))
        d2 = parse_date_string(m.group(2))
        if d1 is None or d2 is None:
            continue
        claimed.append((m.start(), m.end()))
        tags.append((m.start(1), d1, START))
        tags.append((m.start(2), d2, END))
    for m in _TRIGGERED.finditer(text):
        if overlaps_claimed(m.start(), m.end()):
            continue
        d = parse_date_string(m.group(2))
        if d is None:
            continue
        trigger = m.group(1).lower()
        if trigger in ("since", "starting", "as of", "from"):
            cls = START
        else:
            cls = END
        claimed.append((m.start(), m.end()))
        tags.append((m.start(2), d, cls))
    for m in _BARE.finditer(text):
        if m.group(2) is None:
            continue
        s, e = m.start(2), m.end(2)
        if overlaps_claimed(s, e):
            continue
        d = parse_date_string(m.group(2))
        if d is None:
            continue
        claimed.append((s, e))
        tags.append((s, d, POINT))
    tags.sort(key=lambda t: t[0])
    return [(d, cls) for _, d, cls in tags]


def _presence(needle: str, doc: Document) -> bool:
    return needle in fold(doc.text)


@dataclass(frozen=True)
class _Inference:
    t_start: date
    t_end: Optional[date]
    start_inferred: bool
    end_inferred: bool


def _stage_sentence(
    text: str, kind: NuggetKind, doc_time: date
) -> _Inference:
    tags = tag_temporal_expressions(text)
    t_start: Optional[date] = None
    start_from_point = False
    for d, cls in tags:
        if cls == START:
            t_start = d
            break
    if t_start is None:
        for d, cls in tags:
            if cls == POINT:
                t_start = d
                start_from_point = True
                break
    start_inferred = t_start is None
    if t_start is None:
        t_start = doc_time
    t_end: Optional[date] = None
    for d, cls in tags:
        if cls == END:
            t_end = d
            break
    # end_inferred marks any end not stated in the text, OPEN included
    end_inferred = t_end is None
    if t_end is None and start_from_point and kind is NuggetKind.EPISODIC_EVENT:
        t_end = next_day(t_start)
    return _Inference(t_start, t_end, start_inferred, end_inferred)


def sentence_interval(
    text: str, kind: NuggetKind, doc_time: date
) -> tuple[date, Optional[date]]:
    """Interval implied by the sentence text alone, before any history or
    conflict tightening. Used for systems that index bare propositions."""
    inf = _stage_sentence(text, kind, doc_time)
    return inf.t_start, inf.t_end


def infer_validity(
    canon: CanonicalCandidate,
    doc: Document,
    history: Sequence[Document],
    index: Optional[KeyQueryable] = None,
    schema: Optional[Schema] = None,
    scope: Scope = GLOBAL,
) -> ValidityInterval:
    """Infer the half-open assertion window for a canonical candidate.

    ``history`` is the time-ordered revision chain containing ``doc``
    (possibly just ``doc`` itself). Raises DegenerateIntervalError when the
    combined evidence leaves an empty window.
    """
    cand = canon.candidate
    inf = _stage_sentence(cand.text, canon.kind, doc.timestamp)
    t_start, t_end = inf.t_start, inf.t_end
    start_inferred, end_inferred = inf.start_inferred, inf.end_inferred

    chain = sorted(history, key=lambda d: (d.timestamp, d.doc_id))
    if len(chain) > 1:
        needle = fold(doc.text[cand.span_start : cand.span_end])
        if not needle:
            needle = fold(cand.text)
        for prev, nxt in zip(chain, chain[1:]):
            here, there = _presence(needle, prev), _presence(needle, nxt)
            if here and not there:
                t_end = earlier(t_end, nxt.timestamp)
                end_inferred = True
            elif not here and there:
                t_start = later(t_start, nxt.timestamp)

    functional = canon.cardinality == FUNCTIONAL
    if schema is not None:
        functional = schema.is_functional(canon.key.predicate)
    if index is not None and functional:
        value = canon.fact.object_norm
        for other in index.records_for_key(canon.key):
            if other.fact.object_norm == value:
                continue
            if other.validity.t_start > t_start and index.evidence_count(other) >= 2:
                t_end = earlier(t_end, other.validity.t_start)
                end_inferred = True

    if t_end is not None and t_start >= t_end:
        raise DegenerateIntervalError(
            f"empty window [{t_start}, {t_end}) for {cand.text!r}"
        )
    return ValidityInterval(
        t_start=t_start,
        t_end=t_end,
        scope=scope,
        source_type=cand.source_type,
        start_inferred=start_inferred,
        end_inferred=end_inferred,
    )


def conflict_tightened_end(
    record: NuggetRecord, index: KeyQueryable
) -> Optional[date]:
    """Retro-refinement: the tightest end bound implied by later conflicting
    records with two or more independent evidences, or None if unchanged."""
    t_end = record.validity.t_end
    changed = False
    for other in index.records_for_key(record.key):
        if other.id == record.id:
            continue
        if other.fact.object_norm == record.fact.object_norm:
            continue
        if (
            other.validity.t_start > record.validity.t_start
            and index.evidence_count(other) >= 2
        ):
            new_end = earlier(t_end, other.validity.t_start)
            if new_end != t_end:
                t_end = new_end
                changed = True
    return t_end if changed else None
