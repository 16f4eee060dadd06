"""Record model for governed fact nuggets.

A nugget is one atomic fact held as a managed record: the fact triple, the
interval over which sources assert it holds, an epistemic lifecycle state,
and the evidence trail grounding it. Values here are immutable; mutation
happens by replacement through the index's single-writer path.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Any, Iterable, Iterator, Optional

from .dates import contains, format_date, parse_end, parse_timestamp


class NuggetKind(str, Enum):
    SEMANTIC_FACT = "SemanticFact"
    EPISODIC_EVENT = "EpisodicEvent"
    PREFERENCE = "Preference"
    PROCEDURE = "Procedure"


class Status(str, Enum):
    ACTIVE = "Active"
    DEPRECATED = "Deprecated"
    CONTESTED = "Contested"


class Rank(str, Enum):
    PREFERRED = "Preferred"
    NORMAL = "Normal"
    DEPRECATED = "Deprecated"


class SourceType(str, Enum):
    PRIMARY = "primary"
    SECONDARY = "secondary"
    DERIVED = "derived"
    FALLBACK = "fallback"


class View(str, Enum):
    ACTIVE = "active"
    ACTIVE_PLUS_CONTESTED = "active_plus_contested"


RANK_WEIGHT = {Rank.PREFERRED: 1.0, Rank.NORMAL: 0.8, Rank.DEPRECATED: 0.0}


@dataclass(frozen=True)
class Scope:
    """Visibility scope of a fact: global, or bound to a user/group id."""

    kind: str = "global"
    id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ("global", "user", "group"):
            raise ValueError(f"bad scope kind: {self.kind!r}")
        if self.kind == "global" and self.id is not None:
            raise ValueError("global scope takes no id")
        if self.kind != "global" and not self.id:
            raise ValueError(f"{self.kind} scope requires an id")

    def __str__(self) -> str:
        return self.kind if self.kind == "global" else f"{self.kind}:{self.id}"

    @staticmethod
    def parse(text: str) -> "Scope":
        if text == "global":
            return Scope()
        kind, sep, ident = text.partition(":")
        if not sep:
            raise ValueError(f"bad scope string: {text!r}")
        return Scope(kind=kind, id=ident)


GLOBAL = Scope()


@dataclass(frozen=True)
class FactTriple:
    subject_raw: str
    subject_norm: str
    predicate: str
    object_raw: str
    object_norm: str


@dataclass(frozen=True)
class ValidityInterval:
    """Half-open [t_start, t_end) assertion window; t_end None means open."""

    t_start: date
    t_end: Optional[date] = None
    scope: Scope = GLOBAL
    location: Optional[str] = None
    source_type: SourceType = SourceType.PRIMARY
    start_inferred: bool = False
    end_inferred: bool = False

    def __post_init__(self) -> None:
        if self.t_end is not None and self.t_start >= self.t_end:
            raise ValueError(
                f"degenerate interval: {self.t_start} >= {self.t_end}"
            )

    def contains(self, t: date) -> bool:
        return contains(self.t_start, self.t_end, t)


@dataclass(frozen=True)
class EpistemicState:
    status: Status = Status.ACTIVE
    rank: Rank = Rank.NORMAL
    confidence: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")
        if self.status is Status.DEPRECATED and self.rank is not Rank.DEPRECATED:
            raise ValueError("Deprecated status requires Deprecated rank")


@dataclass(frozen=True)
class Evidence:
    doc_id: str
    span_start: int
    span_end: int
    doc_time: date
    revision_id: Optional[str] = None
    source_type: SourceType = SourceType.PRIMARY


@dataclass(frozen=True)
class Provenance:
    evidence: tuple[Evidence, ...]
    created_at: date
    extractor_id: str
    parent_id: Optional[str] = None


@dataclass(frozen=True)
class NuggetKey:
    """Conflict-detection key. The object value is deliberately excluded."""

    subject_norm: str
    predicate: str
    scope: Scope = GLOBAL


@dataclass(frozen=True)
class NuggetRecord:
    id: str
    kind: NuggetKind
    fact: FactTriple
    text: str
    validity: ValidityInterval
    epistemic: EpistemicState
    provenance: Provenance
    access_count: int = 0

    @property
    def key(self) -> NuggetKey:
        return NuggetKey(
            subject_norm=self.fact.subject_norm,
            predicate=self.fact.predicate,
            scope=self.validity.scope,
        )


def compute_nugget_id(
    kind: NuggetKind, fact: FactTriple, scope: Scope, t_start: date
) -> str:
    """Deterministic 128-bit content id over the normalized identity fields.

    Raw surface fields are excluded so paraphrases of one fact collide;
    t_start is included so temporal succession of the same triple yields
    distinct records.
    """
    if not fact.subject_norm or not fact.predicate:
        raise ValueError("subject_norm and predicate must be non-empty")
    payload = "|".join(
        (
            kind.value,
            fact.subject_norm,
            fact.predicate,
            fact.object_norm,
            str(scope),
            t_start.isoformat(),
        )
    )
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=16).hexdigest()


def is_retrievable(record: NuggetRecord, t: date, view: View) -> bool:
    """Visibility rule: inside the validity window and allowed by the view.

    Deprecated records are never retrievable through any view.
    """
    if not record.validity.contains(t):
        return False
    status = record.epistemic.status
    if status is Status.ACTIVE:
        return True
    if status is Status.CONTESTED:
        return view is View.ACTIVE_PLUS_CONTESTED
    return False


def merged_confidence(evidence_count: int) -> float:
    """Corroboration placeholder: 0.5 base plus 0.1 per extra evidence."""
    return min(1.0, 0.5 + 0.1 * (evidence_count - 1))


def independent_evidence_count(
    record: NuggetRecord, chain_root: Optional[dict[str, str]] = None
) -> int:
    """Distinct-source count; revisions of one document count once."""
    roots = set()
    for ev in record.provenance.evidence:
        doc = ev.doc_id
        if chain_root:
            doc = chain_root.get(doc, doc)
        roots.add(doc)
    return len(roots)


# --- serialization ---------------------------------------------------------

def record_to_dict(record: NuggetRecord) -> dict[str, Any]:
    v = record.validity
    e = record.epistemic
    p = record.provenance
    return {
        "id": record.id,
        "kind": record.kind.value,
        "fact": {
            "subject_raw": record.fact.subject_raw,
            "subject_norm": record.fact.subject_norm,
            "predicate": record.fact.predicate,
            "object_raw": record.fact.object_raw,
            "object_norm": record.fact.object_norm,
        },
        "text": record.text,
        "validity": {
            "t_start": v.t_start.isoformat(),
            "t_end": format_date(v.t_end),
            "scope": str(v.scope),
            "location": v.location,
            "source_type": v.source_type.value,
            "start_inferred": v.start_inferred,
            "end_inferred": v.end_inferred,
        },
        "epistemic": {
            "status": e.status.value,
            "rank": e.rank.value,
            "confidence": e.confidence,
        },
        "provenance": {
            "evidence": [
                {
                    "doc_id": ev.doc_id,
                    "revision_id": ev.revision_id,
                    "span_start": ev.span_start,
                    "span_end": ev.span_end,
                    "doc_time": ev.doc_time.isoformat(),
                    "source_type": ev.source_type.value,
                }
                for ev in p.evidence
            ],
            "created_at": p.created_at.isoformat(),
            "extractor_id": p.extractor_id,
            "parent_id": p.parent_id,
        },
        "access_count": record.access_count,
    }


def record_from_dict(data: dict[str, Any]) -> NuggetRecord:
    fact = FactTriple(**data["fact"])
    v = data["validity"]
    validity = ValidityInterval(
        t_start=parse_timestamp(v["t_start"]),
        t_end=parse_end(v["t_end"]),
        scope=Scope.parse(v["scope"]),
        location=v.get("location"),
        source_type=SourceType(v.get("source_type", "primary")),
        start_inferred=bool(v.get("start_inferred", False)),
        end_inferred=bool(v.get("end_inferred", False)),
    )
    e = data["epistemic"]
    epistemic = EpistemicState(
        status=Status(e["status"]),
        rank=Rank(e["rank"]),
        confidence=float(e["confidence"]),
    )
    p = data["provenance"]
    evidence = tuple(
        Evidence(
            doc_id=ev["doc_id"],
            revision_id=ev.get("revision_id"),
            span_start=int(ev["span_start"]),
            span_end=int(ev["span_end"]),
            doc_time=parse_timestamp(ev["doc_time"]),
            source_type=SourceType(ev.get("source_type", "primary")),
        )
        for ev in p["evidence"]
    )
    provenance = Provenance(
        evidence=evidence,
        created_at=parse_timestamp(p["created_at"]),
        extractor_id=p["extractor_id"],
        parent_id=p.get("parent_id"),
    )
    return NuggetRecord(
        id=data["id"],
        kind=NuggetKind(data["kind"]),
        fact=fact,
        text=data["text"],
        validity=validity,
        epistemic=epistemic,
        provenance=provenance,
        access_count=int(data.get("access_count", 0)),
    )


def record_to_json(record: NuggetRecord) -> str:
    return json.dumps(record_to_dict(record), ensure_ascii=False, separators=(",", ":"))


def record_from_json(line: str) -> NuggetRecord:
    return record_from_dict(json.loads(line))


def dump_jsonl(records: Iterable[NuggetRecord]) -> str:
    return "\n".join(record_to_json(r) for r in records)


def load_jsonl(text: str) -> Iterator[NuggetRecord]:
    for line in text.splitlines():
        line = line.strip()
        if line:
            yield record_from_json(line)


def with_status(
    record: NuggetRecord,
    status: Status,
    *,
    t_end: Optional[date] = None,
    keep_end: bool = True,
) -> NuggetRecord:
    """Return a copy in the given lifecycle state, keeping rank consistent."""
    if status is Status.DEPRECATED:
        rank = Rank.DEPRECATED
    elif record.epistemic.rank is Rank.DEPRECATED:
        rank = Rank.NORMAL
    else:
        rank = record.epistemic.rank
    epistemic = replace(record.epistemic, status=status, rank=rank)
    validity = record.validity
    if not keep_end:
        validity = replace(validity, t_end=t_end, end_inferred=True)
    return replace(record, epistemic=epistemic, validity=validity)
