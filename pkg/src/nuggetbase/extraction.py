"""Sentence segmentation, context windows, and candidate extraction.

Extraction is deterministic: the same window always yields the same
candidate list. The rule extractor covers copular statements, event verbs
with date adjuncts, and temporal-prefix forms; an external completion
client can be plugged in behind the same interface.
"""
from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from datetime import date
from importlib import resources
from typing import Callable, Optional, Protocol

from .dates import parse_date_string, parse_timestamp
from .model import NuggetKind, SourceType

logger = logging.getLogger(__name__)

EXTRACTOR_RULE_V1 = "rule-v1"

# Abbreviations that a ". " boundary must not split after.
_GUARDS = ("Mr.", "Dr.", "Inc.", "vs.", "e.g.", "i.e.")

_PRONOUNS = ("He", "She", "It", "They")


@dataclass(frozen=True)
class Document:
    doc_id: str
    timestamp: date
    text: str
    revision_of: Optional[str] = None
    source_type: SourceType = SourceType.PRIMARY


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class ContextWindow:
    """Current sentence plus the one before it, with document identity."""

    doc_id: str
    doc_time: date
    text: str
    current: Sentence
    previous: Optional[Sentence] = None
    source_type: SourceType = SourceType.PRIMARY


@dataclass(frozen=True)
class CandidateNugget:
    doc_id: str
    doc_time: date
    subject_raw: str
    predicate_raw: str
    object_raw: str
    text: str
    span_start: int
    span_end: int
    kind_hint: NuggetKind = NuggetKind.SEMANTIC_FACT
    source_type: SourceType = SourceType.PRIMARY


def parse_documents_jsonl(text: str) -> list[Document]:
    """Load documents from line-delimited JSON; raises ValueError on bad rows."""
    docs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {lineno}: not valid JSON: {exc}") from exc
        try:
            docs.append(
                Document(
                    doc_id=row["doc_id"],
                    timestamp=parse_timestamp(row["timestamp"]),
                    text=row["text"],
                    revision_of=row.get("revision_of"),
                    source_type=SourceType(row.get("source_type", "primary")),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"line {lineno}: bad document row: {exc}") from exc
    return docs


# --- segmentation ----------------------------------------------------------

def _guarded(text: str, dot: int) -> bool:
    j = dot
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    return text[j : dot + 1] in _GUARDS


def _push(out: list[Sentence], text: str, start: int, end: int) -> None:
    s, e = start, end
    while s < e and text[s].isspace():
        s += 1
    while e > s and text[e - 1].isspace():
        e -= 1
    if e > s:
        out.append(Sentence(text=text[s:e], start=s, end=e))


def segment_sentences(text: str) -> list[Sentence]:
    """Split on '. ', '? ', '! ' and newlines, honoring the guard list.

    Spans are over the original text: disjoint, ordered, trimmed of
    surrounding whitespace.
    """
    out: list[Sentence] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            _push(out, text, start, i)
            start = i + 1
            i += 1
            continue
        if ch in ".?!" and i + 1 < n and text[i + 1] == " ":
            if ch == "." and _guarded(text, i):
                i += 1
                continue
            _push(out, text, start, i + 1)
            start = i + 1
            i += 2
            continue
        i += 1
    _push(out, text, start, n)
    return out


def build_windows(doc: Document) -> list[ContextWindow]:
    """One window per sentence: the sentence plus its predecessor as warm-up."""
    sentences = segment_sentences(doc.text)
    windows = []
    for i, sent in enumerate(sentences):
        prev = sentences[i - 1] if i > 0 else None
        text = sent.text if prev is None else prev.text + " " + sent.text
        windows.append(
            ContextWindow(
                doc_id=doc.doc_id,
                doc_time=doc.timestamp,
                text=text,
                current=sent,
                previous=prev,
                source_type=doc.source_type,
            )
        )
    return windows


# --- rule extractor --------------------------------------------------------

_DATE = r"(?:\d{4}-\d{2}-\d{2}|[A-Z][a-z]+ \d{1,2}, \d{4}|\d{1,2} [A-Z][a-z]+ \d{4}|\d{4})"

_TEMPORAL_PREFIX = re.compile(
    rf"^(?:Since|Starting|As of) ({_DATE}),?\s+|^From ({_DATE}) to ({_DATE}),?\s+"
)
_COPULA = r"(?:has been|have been|had been|is|was|are|were)"
_COPULAR = re.compile(rf"^(?P<subj>.+?) (?P<cop>{_COPULA}) (?P<comp>.+)$")
_OF_COMP = re.compile(r"^(?P<det>the|a|an) (?P<pred>.+?) of (?P<obj>.+)$")
_PART_COMP = re.compile(r"^(?P<pred>\w+ed) (?P<prep>in|at) (?P<obj>.+)$")
_BECAME = re.compile(
    r"^(?P<subj>.+?) became (?P<det>the )?(?P<pred>.+?) of (?P<obj>.+)$"
)
_VERBED = re.compile(
    rf"^(?P<subj>.+?) (?P<verb>\w+ed) (?P<obj>.+?) (?:on|in) (?P<date>{_DATE})[.!?]?$"
)
_TRAILING_DATE = re.compile(rf"\s+(?:on|in) (?P<date>{_DATE})$")


def _clean(text: str) -> str:
    return text.strip().strip(".!?").strip().rstrip(",")


def _strip_date_adjunct(text: str) -> str:
    cleaned = _clean(text)
    m = _TRAILING_DATE.search(cleaned)
    if m:
        cleaned = cleaned[: m.start()].rstrip(",").strip()
    return cleaned


def _match_clause(clause: str) -> Optional[tuple[str, str, str, NuggetKind]]:
    """Return (subject, predicate, object, kind hint) or None."""
    body = clause.strip()
    m = _TEMPORAL_PREFIX.match(body)
    if m:
        body = body[m.end() :]
    m = _BECAME.match(_clean(body))
    if m:
        pred = "became " + ("the " if m.group("det") else "") + m.group("pred") + " of"
        return (
            m.group("subj").strip(),
            pred,
            _strip_date_adjunct(m.group("obj")),
            NuggetKind.EPISODIC_EVENT,
        )
    m = _VERBED.match(body.strip())
    if m and m.group("verb").lower() not in ("ed",):
        return (
            m.group("subj").strip(),
            m.group("verb"),
            _clean(m.group("obj")),
            NuggetKind.EPISODIC_EVENT,
        )
    m = _COPULAR.match(_clean(body))
    if m:
        subj = m.group("subj").strip()
        cop = m.group("cop")
        comp = m.group("comp").strip()
        of = _OF_COMP.match(comp)
        if of:
            pred = f"{cop} {of.group('det')} {of.group('pred')} of"
            return (subj, pred, _strip_date_adjunct(of.group("obj")), NuggetKind.SEMANTIC_FACT)
        part = _PART_COMP.match(comp)
        if part:
            pred = f"{cop} {part.group('pred')} {part.group('prep')}"
            return (subj, pred, _strip_date_adjunct(part.group("obj")), NuggetKind.SEMANTIC_FACT)
        return (subj, cop, _strip_date_adjunct(comp), NuggetKind.SEMANTIC_FACT)
    return None


_LEADING_NAME = re.compile(r"^((?:(?:Mr|Dr|Mrs|Ms)\.\s+)?[A-Z][\w'-]*(?:\s+[A-Z][\w'-]*)*)")


def _guess_subject(sentence_text: str) -> Optional[str]:
    hit = _match_clause(sentence_text)
    if hit:
        return hit[0]
    m = _LEADING_NAME.match(sentence_text.strip())
    if m:
        return m.group(1)
    return None


def _resolve_pronoun(text: str, previous: Optional[Sentence]) -> str:
    first, _, rest = text.partition(" ")
    if first in _PRONOUNS and previous is not None and rest:
        subject = _guess_subject(previous.text)
        if subject:
            return subject + " " + rest
    return text


def _split_clauses(text: str, base: int) -> list[tuple[str, int, int]]:
    """Split at ' and ' / '; ' only where both halves parse on their own."""
    for sep in ("; ", " and "):
        idx = text.find(sep)
        while idx != -1:
            left, right = text[:idx], text[idx + len(sep) :]
            if _match_clause(left) and _match_clause(right):
                return _split_clauses(left, base) + _split_clauses(
                    right, base + idx + len(sep)
                )
            idx = text.find(sep, idx + 1)
    return [(text, base, base + len(text))]


class Extractor(Protocol):
    def extract(self, window: ContextWindow) -> list[CandidateNugget]: ...


class RuleExtractor:
    """Deterministic pattern-based extractor; the reference implementation."""

    extractor_id = EXTRACTOR_RULE_V1

    def extract(self, window: ContextWindow) -> list[CandidateNugget]:
        out = []
        sent = window.current
        for clause, rel_start, rel_end in _split_clauses(sent.text, 0):
            resolved = _resolve_pronoun(clause, window.previous) if rel_start == 0 else clause
            hit = _match_clause(resolved)
            if hit is None:
                continue
            subj, pred, obj, kind = hit
            if not subj or not obj:
                continue
            out.append(
                CandidateNugget(
                    doc_id=window.doc_id,
                    doc_time=window.doc_time,
                    subject_raw=subj,
                    predicate_raw=pred,
                    object_raw=obj,
                    text=resolved,
                    span_start=sent.start + rel_start,
                    span_end=sent.start + rel_end,
                    kind_hint=kind,
                    source_type=window.source_type,
                )
            )
        return out


def extract_candidates(window: ContextWindow, extractor: Extractor) -> list[CandidateNugget]:
    return extractor.extract(window)


def extract_document(doc: Document, extractor: Extractor) -> list[CandidateNugget]:
    out = []
    for window in build_windows(doc):
        out.extend(extractor.extract(window))
    return out


# --- completion-backed extractor ------------------------------------------

class TransportError(RuntimeError):
    """Raised when the completion transport fails; carries window identity."""

    def __init__(self, message: str, doc_id: str, span: tuple[int, int]):
        super().__init__(message)
        self.doc_id = doc_id
        self.span = span


def load_prompt() -> str:
    return (
        resources.files("nuggetbase.assets")
        .joinpath("extraction_prompt.txt")
        .read_text(encoding="utf-8")
    )


class CompletionExtractor:
    """Extractor backed by an external completion endpoint.

    ``transport`` maps a prompt string to the raw model reply. Replies must
    be a JSON array of {subject, predicate, object, statement, span_hint}.
    Malformed items are skipped with a log line; transport failures raise
    TransportError so the caller can retry the window.
    """

    extractor_id = "completion-v1"

    def __init__(self, transport: Callable[[str], str], max_in_flight: int = 4):
        self._transport = transport
        self._gate = threading.Semaphore(max_in_flight)
        self._prompt = load_prompt()

    def extract(self, window: ContextWindow) -> list[CandidateNugget]:
        prompt = self._prompt.replace("{{WINDOW}}", window.text)
        span = (window.current.start, window.current.end)
        with self._gate:
            try:
                reply = self._transport(prompt)
            except Exception as exc:
                raise TransportError(str(exc), window.doc_id, span) from exc
        try:
            items = json.loads(reply)
            if not isinstance(items, list):
                raise ValueError("reply is not a JSON array")
        except ValueError as exc:
            logger.warning("unparseable extraction reply for %s: %s", window.doc_id, exc)
            return []
        out = []
        for item in items:
            try:
                statement = item["statement"]
                anchor = item.get("span_hint") or statement
                rel = window.current.text.find(anchor)
                if rel < 0:
                    rel, anchor = 0, window.current.text
                out.append(
                    CandidateNugget(
                        doc_id=window.doc_id,
                        doc_time=window.doc_time,
                        subject_raw=item["subject"],
                        predicate_raw=item["predicate"],
                        object_raw=item["object"],
                        text=statement,
                        span_start=window.current.start + rel,
                        span_end=window.current.start + rel + len(anchor),
                        source_type=window.source_type,
                    )
                )
            except (KeyError, TypeError) as exc:
                logger.warning("skipping malformed extraction item: %s", exc)
        return out
