"""Canonicalization: surface forms to normalized fact triples and keys.

Subjects and objects fold case, collapse whitespace, and resolve through an
alias table. Predicates resolve against a schema of canonical relations;
surface forms listed as inverse aliases arrive with subject and object
swapped relative to the canonical orientation and are flipped here.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Optional

from .dates import overlaps, parse_date_string
from .extraction import CandidateNugget, Document, Extractor, extract_document
from .model import FactTriple, NuggetKey, NuggetKind, Scope, GLOBAL

logger = logging.getLogger(__name__)

FUNCTIONAL = "functional"
MULTI_VALUED = "multi_valued"

# Leading auxiliaries stripped before predicate alias matching.
_AUX = {"is", "was", "are", "were", "has", "have", "had", "been", "being"}


class UnmappedPredicate(ValueError):
    """Raised when a predicate surface form matches no schema entry."""


def fold(text: str) -> str:
    return " ".join(text.casefold().split())


@dataclass(frozen=True)
class PredicateSchema:
    canonical_name: str
    aliases: tuple[str, ...] = ()
    subject_type: str = "other"
    object_type: str = "other"
    cardinality: str = FUNCTIONAL
    inverse_aliases: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.cardinality not in (FUNCTIONAL, MULTI_VALUED):
            raise ValueError(f"bad cardinality: {self.cardinality!r}")


class Schema:
    """Loaded predicate schema with alias lookup tables."""

    def __init__(self, entries: Iterable[PredicateSchema]):
        self.entries = list(entries)
        self._by_name = {e.canonical_name: e for e in self.entries}
        # alias surface -> (entry, inverted, alias length)
        self._alias_map: dict[str, tuple[PredicateSchema, bool]] = {}
        for entry in self.entries:
            self._register(fold(entry.canonical_name), entry, False)
            for alias in entry.aliases:
                self._register(fold(alias), entry, False)
            for alias in entry.inverse_aliases:
                self._register(fold(alias), entry, True)

    def _register(self, surface: str, entry: PredicateSchema, inverted: bool) -> None:
        prior = self._alias_map.get(surface)
        if prior is not None and prior[0] is not entry:
            logger.warning(
                "alias %r claimed by both %s and %s; keeping the first",
                surface, prior[0].canonical_name, entry.canonical_name,
            )
            return
        self._alias_map[surface] = (entry, inverted)

    def get(self, canonical_name: str) -> Optional[PredicateSchema]:
        return self._by_name.get(canonical_name)

    def is_functional(self, canonical_name: str) -> bool:
        entry = self._by_name.get(canonical_name)
        return entry is not None and entry.cardinality == FUNCTIONAL

    def match(self, surface: str) -> Optional[tuple[PredicateSchema, bool]]:
        return self._alias_map.get(surface)

    @staticmethod
    def from_json(text: str) -> "Schema":
        rows = json.loads(text)
        if not isinstance(rows, list):
            raise ValueError("schema file must be a JSON array")
        entries = [
            PredicateSchema(
                canonical_name=row["canonical_name"],
                aliases=tuple(row.get("aliases", ())),
                subject_type=row.get("subject_type", "other"),
                object_type=row.get("object_type", "other"),
                cardinality=row.get("cardinality", FUNCTIONAL),
                inverse_aliases=tuple(row.get("inverse_aliases", ())),
            )
            for row in rows
        ]
        return Schema(entries)

    def to_json(self) -> str:
        rows = []
        for e in self.entries:
            row = {
                "canonical_name": e.canonical_name,
                "aliases": list(e.aliases),
                "subject_type": e.subject_type,
                "object_type": e.object_type,
                "cardinality": e.cardinality,
            }
            if e.inverse_aliases:
                row["inverse_aliases"] = list(e.inverse_aliases)
            rows.append(row)
        return json.dumps(rows, indent=2)


class AliasTable:
    """Surface-to-canonical entity names; keys and targets are case-folded."""

    def __init__(self, mapping: Optional[dict[str, str]] = None):
        self._map = {fold(k): fold(v) for k, v in (mapping or {}).items()}

    def resolve(self, folded: str) -> str:
        return self._map.get(folded, folded)

    def __contains__(self, folded: str) -> bool:
        return folded in self._map

    def canonical_values(self) -> set[str]:
        return set(self._map.values())

    @staticmethod
    def from_json(text: str) -> "AliasTable":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("alias table must be a JSON object")
        return AliasTable(data)


EMPTY_ALIASES = AliasTable()


def normalize_subject(text: str, aliases: AliasTable = EMPTY_ALIASES) -> str:
    return aliases.resolve(fold(text))


def normalize_object(text: str, aliases: AliasTable = EMPTY_ALIASES) -> str:
    """Dates normalize to ISO day form; everything else folds like subjects."""
    d = parse_date_string(text.strip())
    if d is not None:
        return d.isoformat()
    return aliases.resolve(fold(text))


def strip_auxiliaries(surface: str) -> str:
    tokens = surface.split()
    i = 0
    while i < len(tokens) and tokens[i] in _AUX:
        i += 1
    return " ".join(tokens[i:]) if i < len(tokens) else surface


@dataclass(frozen=True)
class PredicateMatch:
    canonical_name: str
    inverted: bool
    entry: PredicateSchema


def normalize_predicate(predicate_raw: str, schema: Schema) -> Optional[PredicateMatch]:
    """Longest-alias match over the folded surface and its aux-stripped form.

    Returns None for unmapped surfaces; callers quarantine those.
    """
    folded = fold(predicate_raw)
    candidates = {folded, strip_auxiliaries(folded)}
    best: Optional[tuple[int, str, PredicateSchema, bool]] = None
    for surface in candidates:
        hit = schema.match(surface)
        if hit is None:
            continue
        entry, inverted = hit
        rank = (len(surface), entry.canonical_name)
        if best is None or rank > (best[0], best[1]):
            best = (len(surface), entry.canonical_name, entry, inverted)
    if best is None:
        return None
    return PredicateMatch(canonical_name=best[1], inverted=best[3], entry=best[2])


@dataclass(frozen=True)
class CanonicalCandidate:
    """A candidate after canonicalization, ready for validity inference."""

    candidate: CandidateNugget
    fact: FactTriple
    key: NuggetKey
    kind: NuggetKind
    cardinality: str


def canonicalize_candidate(
    candidate: CandidateNugget,
    schema: Schema,
    aliases: AliasTable = EMPTY_ALIASES,
    scope: Scope = GLOBAL,
) -> CanonicalCandidate:
    match = normalize_predicate(candidate.predicate_raw, schema)
    if match is None:
        raise UnmappedPredicate(candidate.predicate_raw)
    subj_raw, obj_raw = candidate.subject_raw, candidate.object_raw
    if match.inverted:
        subj_raw, obj_raw = obj_raw, subj_raw
    fact = FactTriple(
        subject_raw=subj_raw,
        subject_norm=normalize_subject(subj_raw, aliases),
        predicate=match.canonical_name,
        object_raw=obj_raw,
        object_norm=normalize_object(obj_raw, aliases),
    )
    key = NuggetKey(subject_norm=fact.subject_norm, predicate=fact.predicate, scope=scope)
    return CanonicalCandidate(
        candidate=candidate,
        fact=fact,
        key=key,
        kind=candidate.kind_hint,
        cardinality=match.entry.cardinality,
    )


def compute_key(fact: FactTriple, scope: Scope = GLOBAL) -> NuggetKey:
    return NuggetKey(subject_norm=fact.subject_norm, predicate=fact.predicate, scope=scope)


# --- entity typing and schema discovery ------------------------------------

_PLACES = {
    "united states", "usa", "united kingdom", "uk", "france", "germany",
    "japan", "china", "canada", "india", "brazil", "australia",
    "paris", "london", "berlin", "tokyo", "madrid", "lyon", "new york",
    "san francisco", "chicago", "boston", "seattle", "austin", "geneva",
}

_ORG_SUFFIX = {
    "inc", "inc.", "corp", "corp.", "ltd", "ltd.", "llc", "gmbh", "plc",
    "industries", "systems", "labs", "group", "holdings", "university",
    "company", "technologies", "partners", "ventures", "works",
}


def entity_type(text: str, aliases: AliasTable = EMPTY_ALIASES) -> str:
    """Coarse tag in {person, org, place, date, other}."""
    s = " ".join(text.split())
    if not s:
        return "other"
    if parse_date_string(s) is not None:
        return "date"
    folded = fold(s)
    resolved = aliases.resolve(folded)
    if folded in _PLACES or resolved in _PLACES:
        return "place"
    tokens = s.split()
    if tokens[-1].casefold() in _ORG_SUFFIX:
        return "org"
    capitalized = all(t[0].isupper() for t in tokens if t[0].isalpha())
    if capitalized and 2 <= len(tokens) <= 3:
        return "person"
    if capitalized and len(tokens) == 1:
        return "org"
    return "other"


_STOP_HEAD = {"the", "a", "an"} | _AUX


def _head_stem(surface: str) -> str:
    tokens = [t for t in surface.split() if t not in _STOP_HEAD]
    if not tokens:
        return surface.split()[0] if surface.split() else ""
    head = tokens[0]
    if len(head) > 4 and head.endswith("s") and not head.endswith("ss"):
        head = head[:-1]
    return head


def _simple_interval(cand: CandidateNugget) -> tuple[date, Optional[date]]:
    """Sentence-level validity guess used only for cardinality proposals."""
    from .validity import tag_temporal_expressions, START, END, POINT

    tags = tag_temporal_expressions(cand.text)
    start = cand.doc_time
    end: Optional[date] = None
    for d, cls in tags:
        if cls == START:
            start = d
            break
    else:
        for d, cls in tags:
            if cls == POINT:
                start = d
                break
    for d, cls in tags:
        if cls == END:
            end = d
            break
    if end is not None and end <= start:
        end = None
    return start, end


def discover_schema(
    docs: Iterable[Document],
    extractor: Extractor,
    aliases: AliasTable = EMPTY_ALIASES,
    min_support: int = 3,
) -> list[PredicateSchema]:
    """Propose draft schema entries by clustering predicate surface forms.

    Groups share a stemmed head token and subject/object entity types.
    Person-to-org relations are proposed in org-first orientation with the
    observed surfaces as inverse aliases, since conflict keys group by the
    org side. Cardinality is multi_valued when any subject shows two or
    more distinct concurrent objects in the sample.
    """
    groups: dict[tuple[str, str, str], dict] = {}
    for doc in docs:
        for cand in extract_document(doc, extractor):
            surface = strip_auxiliaries(fold(cand.predicate_raw))
            if not surface:
                continue
            subj_t = entity_type(cand.subject_raw, aliases)
            obj_t = entity_type(cand.object_raw, aliases)
            invert = subj_t == "person" and obj_t == "org"
            if invert:
                subj_t, obj_t = obj_t, subj_t
            key = (_head_stem(surface), subj_t, obj_t)
            g = groups.setdefault(
                key, {"surfaces": {}, "observations": [], "inverted": invert}
            )
            g["surfaces"][surface] = g["surfaces"].get(surface, 0) + 1
            subj = cand.object_raw if invert else cand.subject_raw
            obj = cand.subject_raw if invert else cand.object_raw
            g["observations"].append(
                (
                    normalize_subject(subj, aliases),
                    normalize_object(obj, aliases),
                    _simple_interval(cand),
                )
            )

    proposals = []
    for (head, subj_t, obj_t), g in sorted(groups.items()):
        total = sum(g["surfaces"].values())
        if total < min_support or not head:
            continue
        by_subject: dict[str, list] = {}
        for subj, obj, interval in g["observations"]:
            by_subject.setdefault(subj, []).append((obj, interval))
        cardinality = FUNCTIONAL
        for obs in by_subject.values():
            for i in range(len(obs)):
                for j in range(i + 1, len(obs)):
                    if obs[i][0] != obs[j][0] and overlaps(
                        obs[i][1][0], obs[i][1][1], obs[j][1][0], obs[j][1][1]
                    ):
                        cardinality = MULTI_VALUED
                        break
                if cardinality == MULTI_VALUED:
                    break
            if cardinality == MULTI_VALUED:
                break
        surfaces = tuple(sorted(g["surfaces"]))
        proposals.append(
            PredicateSchema(
                canonical_name=head,
                aliases=() if g["inverted"] else surfaces,
                subject_type=subj_t,
                object_type=obj_t,
                cardinality=cardinality,
                inverse_aliases=surfaces if g["inverted"] else (),
            )
        )
    return proposals
