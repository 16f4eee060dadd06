"""Synthetic evolving-corpus generator, baseline retrievers, and metrics.

The generator builds a population of organizations whose functional
attributes (chief executive, headquarters, board chair) change over a
multi-year timeline. Closed tenure segments are narrated retrospectively
with explicit date ranges; the current segment is announced and then
restated in later coverage. A configurable share of entities keeps a
living profile page that is revised at each change, and a share of
documents restates stale facts with fresh timestamps. Queries ask for an
attribute value at a sampled time inside a segment, so ground truth is
known by construction.

Baselines deliberately index at different granularities: whole documents
(with optional time filtering, recency decay, or snapshot pruning) or
bare extracted propositions with no validity or lifecycle handling.
Metrics map every system's retrieved set to (key, value, interval) facts
so recall, temporal correctness, and conflict rate are computed the same
way for all of them.
"""
from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Callable, Optional, Sequence

import numpy as np

from .canonicalize import (
    EMPTY_ALIASES,
    PredicateSchema,
    Schema,
    UnmappedPredicate,
    canonicalize_candidate,
    fold,
)
from .config import Config
from .dates import overlaps
from .extraction import Document, RuleExtractor, extract_document
from .governance import jaccard_value_similarity
from .index import Bm25Index, NuggetEngine, tokenize
from .model import View
from .pipeline import IngestReport, ingest_documents
from .retrieval import Query, retrieve
from .validity import sentence_interval

TIME_WINDOW_DAYS = 180
RECENCY_LAMBDA = 0.001

SYSTEM_NAMES = (
    "nugget_active",
    "nugget_full",
    "nugget_novalidity",
    "proposition",
    "passage_bm25",
    "time_filter",
    "recency_rerank",
    "latest_snapshot",
)


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    n_entities: int = 50
    changes_per_entity: int = 10
    distractor_rate: float = 0.2
    revision_noise_rate: float = 0.15
    date_range: tuple[date, date] = (date(2000, 1, 1), date(2026, 1, 1))
    seed: int = 42

    def to_dict(self) -> dict:
        return {
            "n_entities": self.n_entities,
            "changes_per_entity": self.changes_per_entity,
            "distractor_rate": self.distractor_rate,
            "revision_noise_rate": self.revision_noise_rate,
            "date_range": [d.isoformat() for d in self.date_range],
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(data: dict) -> "SyntheticCorpusSpec":
        rng = data.get("date_range")
        date_range = (
            (date.fromisoformat(rng[0]), date.fromisoformat(rng[1]))
            if rng
            else (date(2000, 1, 1), date(2026, 1, 1))
        )
        return SyntheticCorpusSpec(
            n_entities=int(data.get("n_entities", 50)),
            changes_per_entity=int(data.get("changes_per_entity", 10)),
            distractor_rate=float(data.get("distractor_rate", 0.2)),
            revision_noise_rate=float(data.get("revision_noise_rate", 0.15)),
            date_range=date_range,
            seed=int(data.get("seed", 42)),
        )


@dataclass(frozen=True)
class GoldNugget:
    subject_norm: str
    predicate: str
    value_norm: str
    t_start: date
    t_end: Optional[date]
    vitality: str  # "vital" for the current segment, "okay" for history


@dataclass(frozen=True)
class TimedQuery:
    text: str
    t: date
    subject_norm: str
    predicate: str
    gold_value_norm: str
    gold_index: int


@dataclass
class SyntheticCorpus:
    spec: SyntheticCorpusSpec
    documents: list[Document]
    gold: list[GoldNugget]
    queries: list[TimedQuery]
    schema: Schema


@dataclass(frozen=True)
class RetrievedFact:
    subject_norm: str
    predicate: str
    value_norm: str
    t_start: date
    t_end: Optional[date]


@dataclass
class SystemRun:
    name: str
    per_query: list[list[RetrievedFact]]
    context_blocks: list[str]
    latencies_ms: list[float]


@dataclass
class MetricsReport:
    system: str
    nugget_recall_at_k: float
    temporal_correctness: float
    conflict_rate: float
    governance_score: float
    median_context_tokens: float
    latency_p50_ms: float
    latency_p95_ms: float
    tc_vacuous: bool = False
    k: int = 20

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "k": self.k,
            "nugget_recall_at_k": self.nugget_recall_at_k,
            "temporal_correctness": self.temporal_correctness,
            "conflict_rate": self.conflict_rate,
            "governance_score": self.governance_score,
            "median_context_tokens": self.median_context_tokens,
            "latency_p50_ms": self.latency_p50_ms,
            "latency_p95_ms": self.latency_p95_ms,
            "tc_vacuous": self.tc_vacuous,
        }


# --- corpus construction ---------------------------------------------------

_GIVEN = (
    "Dana", "Priya", "Marcus", "Ingrid", "Tomas", "Aisha", "Viktor", "Lena",
    "Rafael", "Mei", "Oskar", "Zainab", "Henrik", "Carla", "Dmitri", "Noor",
    "Elias", "Sofia", "Patrik", "Amara", "Janek", "Rosa", "Felix", "Yuki",
)
_FAMILY = (
    "Whitfield", "Okafor", "Lindqvist", "Marchetti", "Stein", "Kovacs",
    "Aldana", "Brennan", "Castellanos", "Duarte", "Eriksen", "Farrow",
    "Grimaldi", "Havel", "Iwata", "Jansen", "Keller", "Laurent",
    "Moreau", "Nakata", "Ostrovsky", "Petrova", "Quinn", "Reyes",
)
_CITIES = (
    "Lisbon", "Porto", "Valencia", "Marseille", "Rotterdam", "Antwerp",
    "Goteborg", "Turku", "Gdansk", "Brno", "Graz", "Basel", "Leipzig",
    "Nantes", "Bilbao", "Palermo", "Zagreb", "Riga", "Tartu", "Aarhus",
    "Bergen", "Cork", "Leeds", "Dundee", "Ghent", "Malmo", "Split",
    "Trieste", "Vigo", "Kaunas",
)
_ORG_STEMS = (
    "Helix", "Vantor", "Quorline", "Meridian", "Apex", "Bluewater",
    "Cindral", "Dovetail", "Eastlight", "Fernbrook", "Gridware", "Hollis",
    "Ironvale", "Juniper", "Kestrel", "Larkspur",
)
_ORG_SUFFIXES = ("Dynamics", "Systems", "Holdings", "Logistics", "Analytics", "Labs")

_FILLERS = (
    "The quarterly review covered operational milestones across several divisions.",
    "Regional teams reported steady progress on previously announced initiatives.",
    "Analysts noted continued investment in logistics and supplier programs.",
    "The annual report highlighted infrastructure upgrades completed last year.",
    "Internal audits concluded without material findings during the period.",
    "Procurement volumes remained consistent with earlier planning estimates.",
    "Staff headcount figures tracked closely against the published forecast.",
    "The customer advisory board met twice to discuss roadmap priorities.",
    "Several regional offices consolidated their reporting procedures.",
    "A routine compliance check confirmed adherence to documented policy.",
    "Capital expenditure stayed within the envelope approved by the board.",
    "Partner integrations continued according to the published schedule.",
    "Field engineers completed scheduled maintenance across the network.",
    "Training programs for new hires expanded into two more regions.",
    "The sustainability working group published its periodic findings.",
    "Vendor negotiations concluded with terms broadly similar to prior years.",
    "Product telemetry showed usage patterns consistent with seasonal norms.",
    "The facilities team finished refurbishing the main campus atrium.",
    "Legal counsel reviewed standard contracts without requesting changes.",
    "Community outreach events drew attendance comparable to previous cycles.",
    "Warehouse throughput matched the levels recorded a quarter earlier.",
    "The research group presented preliminary results at an internal forum.",
    "Budget holders submitted their reconciliations ahead of the deadline.",
    "Studio renovations progressed without disrupting scheduled operations.",
    "Pilot programs in two districts reported encouraging participation.",
    "Archival records migrated to the new retention system over the summer.",
    "The ethics committee published minutes from its scheduled sessions.",
    "Catering and travel costs landed slightly under the allotted budget.",
    "Network reliability metrics held steady throughout the reporting window.",
    "Documentation teams refreshed onboarding guides for three departments.",
    "Logistics partners confirmed delivery schedules for the coming quarter.",
    "The operations council reviewed incident summaries from recent weeks.",
    "Shared services consolidated invoicing workflows across both regions.",
    "Maintenance crews completed inspections at the northern depot.",
    "The finance team reconciled ledger entries ahead of the audit window.",
    "Customer support volumes tracked seasonal expectations fairly closely.",
    "The design group circulated revised mockups for internal comment.",
    "Fleet utilization figures improved modestly against the prior period.",
    "Recruiting events in three cities attracted a broad applicant pool.",
    "The data platform team retired two legacy reporting pipelines.",
    "Quarterly safety drills proceeded according to the published rota.",
    "Supplier scorecards showed delivery performance within tolerance.",
    "The translation office expanded coverage to two additional languages.",
    "Energy consumption at the main campus declined for a third period.",
)

_PRED_CEO = "has chief executive"
_PRED_HQ = "is headquartered in"
_PRED_CHAIR = "has board chair"


def build_schema() -> Schema:
    """Predicate schema for the synthetic domain.

    Person-valued role predicates are declared org-first with the natural
    person-first sentence surfaces as inverse aliases, so every statement
    about one office lands under one conflict key."""
    return Schema(
        [
            PredicateSchema(
                _PRED_CEO,
                subject_type="org",
                object_type="person",
                cardinality="functional",
                inverse_aliases=("the chief executive of",),
            ),
            PredicateSchema(
                _PRED_HQ,
                aliases=("headquartered in",),
                subject_type="org",
                object_type="place",
                cardinality="functional",
            ),
            PredicateSchema(
                _PRED_CHAIR,
                subject_type="org",
                object_type="person",
                cardinality="functional",
                inverse_aliases=("the board chair of",),
            ),
        ]
    )


def _sample_people(rng: random.Random, count: int) -> list[str]:
    out: list[str] = []
    seen = set()
    while len(out) < count:
        name = f"{rng.choice(_GIVEN)} {rng.choice(_FAMILY)}"
        if name not in seen:
            seen.add(name)
            out.append(name)
    return out


def _fact_sentence(predicate: str, org: str, value: str, tense: str) -> str:
    if predicate == _PRED_HQ:
        verb = {"past": "was", "present": "is"}[tense]
        return f"{org} {verb} headquartered in {value}."
    role = "chief executive" if predicate == _PRED_CEO else "board chair"
    if tense == "past":
        return f"{value} was the {role} of {org}."
    return f"{value} is the {role} of {org}."


def _announce_sentence(predicate: str, org: str, value: str, since: date) -> str:
    if predicate == _PRED_HQ:
        return f"Since {since.isoformat()}, {org} has been headquartered in {value}."
    role = "chief executive" if predicate == _PRED_CEO else "board chair"
    return f"Since {since.isoformat()}, {value} has been the {role} of {org}."


def _retro_sentence(
    predicate: str, org: str, value: str, start: date, end: date
) -> str:
    body = _fact_sentence(predicate, org, value, "past")[:-1]
    return f"From {start.isoformat()} to {end.isoformat()}, {body[0].lower() + body[1:]}."


def _query_text(predicate: str, org: str) -> str:
    if predicate == _PRED_HQ:
        return f"Where was {org} headquartered?"
    role = "chief executive" if predicate == _PRED_CEO else "board chair"
    return f"Who was the {role} of {org}?"


def _doc(
    doc_id: str,
    ts: date,
    fact_sentences: Sequence[str],
    frng: random.Random,
    revision_of: Optional[str] = None,
    fillers: Optional[list[str]] = None,
) -> tuple[Document, list[str]]:
    # Filler prose comes from its own stream so article length never
    # perturbs the fact-structure draws.
    if fillers is None:
        fillers = frng.sample(_FILLERS, frng.randint(36, 42))
    cut = frng.randint(1, 4)
    sentences = fillers[:cut] + list(fact_sentences) + fillers[cut:]
    return (
        Document(
            doc_id=doc_id,
            timestamp=ts,
            text=" ".join(sentences),
            revision_of=revision_of,
        ),
        fillers,
    )


def generate_corpus(spec: SyntheticCorpusSpec) -> SyntheticCorpus:
    """Deterministic corpus, gold segments, and timed queries from a spec."""
    schema = build_schema()
    documents: list[Document] = []
    gold: list[GoldNugget] = []
    queries: list[TimedQuery] = []
    range_start, _range_end = spec.date_range
    m = spec.changes_per_entity

    for i in range(spec.n_entities):
        rng = random.Random(spec.seed * 100_003 + i)
        frng = random.Random(spec.seed * 50_021 + i)
        org = (
            f"{_ORG_STEMS[i % len(_ORG_STEMS)]} "
            f"{_ORG_SUFFIXES[(i // len(_ORG_STEMS)) % len(_ORG_SUFFIXES)]} "
            f"{i:03d}"
        )
        predicate = (_PRED_CEO, _PRED_HQ, _PRED_CHAIR)[i % 3]
        if predicate == _PRED_HQ:
            values = rng.sample(_CITIES, m)
        else:
            values = _sample_people(rng, m)

        start = range_start + timedelta(days=rng.randint(0, 365))
        seg_lens = [rng.randint(600, 850) for _ in range(m)]
        bounds = [start]
        for length in seg_lens[:-1]:
            bounds.append(bounds[-1] + timedelta(days=length))
        final_start = bounds[-1]
        final_len = seg_lens[-1]

        noisy = rng.random() < spec.revision_noise_rate
        has_distractor = rng.random() < spec.distractor_rate
        has_conflict = rng.random() < 0.6 * spec.distractor_rate

        subject_norm = fold(org)
        for j in range(m):
            t_start = bounds[j]
            t_end = bounds[j + 1] if j + 1 < m else None
            gold.append(
                GoldNugget(
                    subject_norm=subject_norm,
                    predicate=predicate,
                    value_norm=fold(values[j]),
                    t_start=t_start,
                    t_end=t_end,
                    vitality="vital" if t_end is None else "okay",
                )
            )
            seg_len = seg_lens[j]
            offset = rng.randint(int(0.3 * seg_len), int(0.7 * seg_len))
            queries.append(
                TimedQuery(
                    text=_query_text(predicate, org),
                    t=t_start + timedelta(days=offset),
                    subject_norm=subject_norm,
                    predicate=predicate,
                    gold_value_norm=fold(values[j]),
                    gold_index=len(gold) - 1,
                )
            )

        # Retrospective narration of each closed segment, published shortly
        # after the segment ends.
        for j in range(m - 1):
            ts = bounds[j + 1] + timedelta(days=rng.randint(1, 30))
            sent = _retro_sentence(predicate, org, values[j], bounds[j], bounds[j + 1])
            doc, _ = _doc(f"news-{i:03d}-{j:02d}", ts, [sent], frng)
            documents.append(doc)

        # Announcement of the current value: mostly explicitly dated, the
        # rest published later with no date at all.
        explicit = rng.random() < 0.6
        if explicit:
            ts = final_start + timedelta(days=rng.randint(1, 30))
            sent = _announce_sentence(predicate, org, values[-1], final_start)
        else:
            lag = rng.randint(int(0.30 * final_len), int(0.60 * final_len))
            ts = final_start + timedelta(days=lag)
            sent = _fact_sentence(predicate, org, values[-1], "present")
        doc, _ = _doc(f"announce-{i:03d}", ts, [sent], frng)
        documents.append(doc)

        # Two dateless restatements of the current value later in coverage.
        for r, frac in ((0, 0.85), (1, 0.95)):
            ts = final_start + timedelta(days=int(frac * final_len))
            sent = _fact_sentence(predicate, org, values[-1], "present")
            doc, _ = _doc(f"restate-{i:03d}-{r}", ts, [sent], frng)
            documents.append(doc)

        # Living profile page, revised at each boundary: the superseded
        # sentence is dropped and the new one appears.
        if noisy:
            shared_fillers = frng.sample(_FILLERS, frng.randint(36, 42))
            prev_id: Optional[str] = None
            for j in range(m):
                doc_id = f"profile-{i:03d}-r{j:02d}"
                sent = _fact_sentence(predicate, org, values[j], "present")
                doc, _ = _doc(
                    doc_id,
                    bounds[j] if j < m else final_start,
                    [sent],
                    frng,
                    revision_of=prev_id,
                    fillers=shared_fillers,
                )
                documents.append(doc)
                prev_id = doc_id

        # Stale restatement with a fresh timestamp, well inside the final
        # segment; optionally also a novel wrong value that genuinely
        # conflicts with the current one.
        if has_distractor:
            stale_j = rng.randint(0, m - 2)
            ts = final_start + timedelta(
                days=rng.randint(int(0.3 * final_len), int(0.7 * final_len))
            )
            sent = _fact_sentence(predicate, org, values[stale_j], "present")
            doc, _ = _doc(f"stale-{i:03d}", ts, [sent], frng)
            documents.append(doc)
        if has_conflict:
            if predicate == _PRED_HQ:
                novel = rng.choice([c for c in _CITIES if c not in values])
            else:
                used = set(values)
                novel = _sample_people(rng, m + 1)[-1]
                while novel in used:
                    novel = f"{rng.choice(_GIVEN)} {rng.choice(_FAMILY)}"
            ts = final_start + timedelta(
                days=rng.randint(int(0.80 * final_len), int(0.99 * final_len))
            )
            sent = _fact_sentence(predicate, org, novel, "present")
            doc, _ = _doc(f"dispute-{i:03d}", ts, [sent], frng)
            documents.append(doc)

    return SyntheticCorpus(
        spec=spec, documents=documents, gold=gold, queries=queries, schema=schema
    )


# --- governed systems ------------------------------------------------------

def build_engine(
    corpus: SyntheticCorpus, config: Optional[Config] = None
) -> tuple[NuggetEngine, IngestReport]:
    engine = NuggetEngine(schema=corpus.schema, config=config)
    report = ingest_documents(engine, corpus.documents, RuleExtractor(), EMPTY_ALIASES)
    return engine, report


def _record_fact(record) -> RetrievedFact:
    return RetrievedFact(
        subject_norm=record.fact.subject_norm,
        predicate=record.fact.predicate,
        value_norm=record.fact.object_norm,
        t_start=record.validity.t_start,
        t_end=record.validity.t_end,
    )


def run_nugget_system(
    engine: NuggetEngine,
    queries: Sequence[TimedQuery],
    name: str = "nugget_active",
    view: View = View.ACTIVE,
    ignore_validity: bool = False,
    k: int = 20,
) -> SystemRun:
    per_query: list[list[RetrievedFact]] = []
    blocks: list[str] = []
    latencies: list[float] = []
    for q in queries:
        t0 = time.perf_counter()
        result = retrieve(
            engine, Query(text=q.text, t=q.t, k=k, view=view), ignore_validity
        )
        latencies.append((time.perf_counter() - t0) * 1000.0)
        per_query.append([_record_fact(e.record) for e in result.entries])
        blocks.append(result.context)
    return SystemRun(name, per_query, blocks, latencies)


# --- ungoverned baselines --------------------------------------------------

def _doc_facts(
    doc: Document, schema: Schema, extractor: RuleExtractor
) -> list[tuple[RetrievedFact, str]]:
    """Extract (fact, sentence text) pairs with sentence-level intervals only."""
    out = []
    for cand in extract_document(doc, extractor):
        try:
            canon = canonicalize_candidate(cand, schema)
        except UnmappedPredicate:
            continue
        t_start, t_end = sentence_interval(cand.text, canon.kind, doc.timestamp)
        out.append(
            (
                RetrievedFact(
                    subject_norm=canon.fact.subject_norm,
                    predicate=canon.fact.predicate,
                    value_norm=canon.fact.object_norm,
                    t_start=t_start,
                    t_end=t_end,
                ),
                cand.text,
            )
        )
    return out


def run_proposition(
    corpus: SyntheticCorpus, queries: Sequence[TimedQuery], k: int = 20
) -> SystemRun:
    """Extracted statements indexed as plain text: no validity, no lifecycle."""
    extractor = RuleExtractor()
    facts: list[RetrievedFact] = []
    texts: list[str] = []
    for doc in corpus.documents:
        for fact, text in _doc_facts(doc, corpus.schema, extractor):
            facts.append(fact)
            texts.append(text)
    index = Bm25Index()
    for handle, text in enumerate(texts):
        index.add(handle, text)

    per_query, blocks, latencies = [], [], []
    for q in queries:
        t0 = time.perf_counter()
        hits = index.search(tokenize(q.text), k)
        hits.sort(key=lambda h: (-h[1], h[0]))
        hits = hits[:k]
        latencies.append((time.perf_counter() - t0) * 1000.0)
        per_query.append([facts[h] for h, _ in hits])
        blocks.append("\n".join(f"- {texts[h]}" for h, _ in hits))
    return SystemRun("proposition", per_query, blocks, latencies)


def run_doc_mode(
    mode: str, corpus: SyntheticCorpus, queries: Sequence[TimedQuery], k: int = 20
) -> SystemRun:
    """Document-granularity baselines sharing one BM25 index.

    passage_bm25 ranks all documents; time_filter restricts candidates to
    a +/-180 day window around the query time; recency_rerank multiplies
    scores by exp(-lambda * days(t - t_doc)); latest_snapshot indexes only
    each revision chain's newest document.
    """
    docs = corpus.documents
    index = Bm25Index()
    for handle, doc in enumerate(docs):
        index.add(handle, doc.text)

    chain_root: dict[str, str] = {}
    for doc in docs:
        if doc.revision_of:
            chain_root[doc.doc_id] = chain_root.get(doc.revision_of, doc.revision_of)
    newest: dict[str, int] = {}
    for handle, doc in enumerate(docs):
        root = chain_root.get(doc.doc_id, doc.doc_id)
        cur = newest.get(root)
        if cur is None or docs[cur].timestamp < doc.timestamp:
            newest[root] = handle
    snapshot_mask = np.zeros(len(docs), dtype=bool)
    snapshot_mask[list(newest.values())] = True

    extractor = RuleExtractor()
    fact_cache: dict[int, list[RetrievedFact]] = {}

    def facts_for(handle: int) -> list[RetrievedFact]:
        if handle not in fact_cache:
            fact_cache[handle] = [
                f for f, _ in _doc_facts(docs[handle], corpus.schema, extractor)
            ]
        return fact_cache[handle]

    timestamps = np.array([doc.timestamp.toordinal() for doc in docs], dtype=np.int64)

    per_query, blocks, latencies = [], [], []
    for q in queries:
        t0 = time.perf_counter()
        day = q.t.toordinal()
        if mode == "time_filter":
            mask = np.abs(timestamps - day) <= TIME_WINDOW_DAYS
            hits = index.search(tokenize(q.text), k, mask)
            hits.sort(key=lambda h: (-h[1], h[0]))
            hits = hits[:k]
        elif mode == "recency_rerank":
            scores = index.scores(tokenize(q.text))
            decay = np.exp(-RECENCY_LAMBDA * (day - timestamps))
            adjusted = scores * decay
            order = np.argsort(-adjusted, kind="stable")
            hits = [
                (int(h), float(adjusted[h])) for h in order[:k] if adjusted[h] > 0.0
            ]
        elif mode == "latest_snapshot":
            hits = index.search(tokenize(q.text), k, snapshot_mask)
            hits.sort(key=lambda h: (-h[1], h[0]))
            hits = hits[:k]
        else:  # passage_bm25
            hits = index.search(tokenize(q.text), k)
            hits.sort(key=lambda h: (-h[1], h[0]))
            hits = hits[:k]
        latencies.append((time.perf_counter() - t0) * 1000.0)

        retrieved: list[RetrievedFact] = []
        for handle, _score in hits:
            retrieved.extend(facts_for(handle))
        per_query.append(retrieved)
        blocks.append("\n\n".join(docs[h].text for h, _ in hits[:2]))
    return SystemRun(mode, per_query, blocks, latencies)


# --- metrics ---------------------------------------------------------------

def _functional_predicates(schema: Schema) -> set[str]:
    return {e.canonical_name for e in schema.entries if e.cardinality == "functional"}


def compute_metrics(
    run: SystemRun, corpus: SyntheticCorpus, k: int = 20
) -> MetricsReport:
    gold = corpus.gold
    queries = corpus.queries
    functional = _functional_predicates(corpus.schema)

    gold_by_key: dict[tuple[str, str], list[int]] = {}
    for gi, g in enumerate(gold):
        gold_by_key.setdefault((g.subject_norm, g.predicate), []).append(gi)

    def match_gold(fact: RetrievedFact) -> Optional[int]:
        for gi in gold_by_key.get((fact.subject_norm, fact.predicate), ()):
            if jaccard_value_similarity(gold[gi].value_norm, fact.value_norm) >= 0.85:
                return gi
        return None

    matched_gold: set[int] = set()
    tc_hits = 0
    tc_total = 0
    conflict_queries = 0

    for q, retrieved in zip(queries, run.per_query):
        for fact in retrieved:
            gi = match_gold(fact)
            if gi is None:
                continue
            g = gold[gi]
            tc_total += 1
            contains = g.t_start <= q.t and (g.t_end is None or q.t < g.t_end)
            if contains:
                tc_hits += 1
            if gi == q.gold_index:
                matched_gold.add(q.gold_index)

        # Conflict: two retrieved facts under one functional key carrying
        # different values over overlapping system intervals.
        by_key: dict[tuple[str, str], list[RetrievedFact]] = {}
        for fact in retrieved:
            if fact.predicate in functional:
                by_key.setdefault((fact.subject_norm, fact.predicate), []).append(fact)
        found = False
        for group in by_key.values():
            for a_i in range(len(group)):
                for b_i in range(a_i + 1, len(group)):
                    a, b = group[a_i], group[b_i]
                    if jaccard_value_similarity(a.value_norm, b.value_norm) >= 0.85:
                        continue
                    if overlaps(a.t_start, a.t_end, b.t_start, b.t_end):
                        found = True
                        break
                if found:
                    break
            if found:
                break
        if found:
            conflict_queries += 1

    recall = len(matched_gold) / len(gold) if gold else 0.0
    tc_vacuous = tc_total == 0
    tc = 1.0 if tc_vacuous else tc_hits / tc_total
    cr = conflict_queries / len(queries) if queries else 0.0
    tokens = sorted(len(b.split()) for b in run.context_blocks)
    median_tokens = float(statistics.median(tokens)) if tokens else 0.0
    lat = sorted(run.latencies_ms)
    p50 = float(np.percentile(lat, 50)) if lat else 0.0
    p95 = float(np.percentile(lat, 95)) if lat else 0.0
    return MetricsReport(
        system=run.name,
        nugget_recall_at_k=recall,
        temporal_correctness=tc,
        conflict_rate=cr,
        governance_score=tc - cr,
        median_context_tokens=median_tokens,
        latency_p50_ms=p50,
        latency_p95_ms=p95,
        tc_vacuous=tc_vacuous,
        k=k,
    )


def run_eval(
    spec: SyntheticCorpusSpec,
    systems: Sequence[str] = SYSTEM_NAMES,
    k: int = 20,
    corpus: Optional[SyntheticCorpus] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> dict:
    """Generate (or reuse) a corpus, run the requested systems, report metrics."""
    unknown = set(systems) - set(SYSTEM_NAMES)
    if unknown:
        raise ValueError(f"unknown systems: {sorted(unknown)}")
    corpus = corpus or generate_corpus(spec)
    engine = None
    reports: dict[str, dict] = {}
    for name in systems:
        if progress:
            progress(name)
        if name.startswith("nugget"):
            if engine is None:
                engine, _ = build_engine(corpus)
            view = View.ACTIVE_PLUS_CONTESTED if name == "nugget_full" else View.ACTIVE
            run = run_nugget_system(
                engine,
                corpus.queries,
                name=name,
                view=view,
                ignore_validity=(name == "nugget_novalidity"),
                k=k,
            )
        elif name == "proposition":
            run = run_proposition(corpus, corpus.queries, k)
        else:
            run = run_doc_mode(name, corpus, corpus.queries, k)
        reports[name] = compute_metrics(run, corpus, k).to_dict()
    return {"spec": spec.to_dict(), "k": k, "systems": reports}
