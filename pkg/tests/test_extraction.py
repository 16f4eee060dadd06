"""Sentence segmentation, rule-based candidate extraction, span fidelity."""
from datetime import date

import pytest

from nuggetbase.extraction import (
    Document,
    RuleExtractor,
    build_windows,
    extract_document,
    parse_documents_jsonl,
    segment_sentences,
)
from nuggetbase.model import NuggetKind


def extract(text, ts=date(2021, 6, 1)):
    doc = Document(doc_id="d1", timestamp=ts, text=text)
    return extract_document(doc, RuleExtractor())


def test_segmentation_handles_abbreviations():
    sents = segment_sentences("Dr. Reed met the board. The vote passed.")
    assert [s.text for s in sents] == ["Dr. Reed met the board.", "The vote passed."]


def test_segmentation_spans_index_into_source():
    text = "First point here. Second point there!  Third?"
    sents = segment_sentences(text)
    assert len(sents) == 3
    for s in sents:
        assert text[s.start : s.end] == s.text


def test_copular_of_pattern():
    cands = extract("Maria Keller is the president of Halden Group.")
    assert len(cands) == 1
    c = cands[0]
    assert c.subject_raw == "Maria Keller"
    assert c.predicate_raw == "is the president of"
    assert c.object_raw == "Halden Group"
    assert c.kind_hint is NuggetKind.SEMANTIC_FACT


def test_copular_participle_pattern():
    cands = extract("Halden Group is headquartered in Oslo.")
    assert len(cands) == 1
    assert cands[0].predicate_raw == "is headquartered in"
    assert cands[0].object_raw == "Oslo"


def test_became_is_episodic():
    cands = extract("Maria Keller became president of Halden Group.")
    assert len(cands) == 1
    assert cands[0].kind_hint is NuggetKind.EPISODIC_EVENT


def test_verbed_with_date_only():
    with_date = extract("Halden Group acquired Polar Logistics on 2019-05-07.")
    assert len(with_date) == 1
    assert with_date[0].object_raw == "Polar Logistics"
    # Without a date adjunct the rule stays quiet instead of guessing.
    without = extract("Halden Group acquired Polar Logistics.")
    assert without == []


def test_temporal_prefix_survives_in_candidate_text():
    cands = extract("Since 2019-03-02, Maria Keller has been the president of Halden Group.")
    assert len(cands) == 1
    assert cands[0].text.startswith("Since 2019-03-02")
    assert cands[0].predicate_raw == "has been the president of"


def test_candidate_spans_point_at_source_text():
    text = "Filler sentence first. Maria Keller is the president of Halden Group. More filler."
    doc = Document(doc_id="d9", timestamp=date(2021, 6, 1), text=text)
    cands = extract_document(doc, RuleExtractor())
    assert len(cands) == 1
    c = cands[0]
    assert text[c.span_start : c.span_end] == c.text


def test_pronoun_resolution_uses_previous_subject():
    cands = extract("Maria Keller joined the board. She is the president of Halden Group.")
    names = [c.subject_raw for c in cands]
    assert "Maria Keller" in names


def test_plain_prose_yields_nothing():
    assert extract("The quarterly review covered several operational milestones.") == []
    assert extract("Revenue grew strongly across two regions.") == []


def test_doc_time_and_ids_propagate():
    cands = extract("Halden Group is based in Oslo.", ts=date(2022, 2, 2))
    assert cands[0].doc_id == "d1"
    assert cands[0].doc_time == date(2022, 2, 2)


def test_windows_keep_document_identity():
    doc = Document(
        doc_id="r2",
        timestamp=date(2021, 1, 1),
        text="One sentence. Two sentence.",
        revision_of="r1",
    )
    windows = build_windows(doc)
    assert len(windows) == 2
    assert all(w.doc_id == "r2" for w in windows)
    # second window sees the first sentence as prior context
    assert windows[1].previous is not None
    assert windows[1].previous.text == "One sentence."
    assert windows[0].previous is None


def test_parse_documents_jsonl_round_trip():
    text = (
        '{"doc_id": "a", "timestamp": "2020-01-01", "text": "Alpha."}\n'
        '{"doc_id": "b", "timestamp": "2020-01-02", "text": "Beta.", "revision_of": "a"}\n'
    )
    docs = parse_documents_jsonl(text)
    assert [d.doc_id for d in docs] == ["a", "b"]
    assert docs[1].revision_of == "a"
    assert docs[0].timestamp == date(2020, 1, 1)


def test_multiple_facts_in_one_document():
    text = (
        "Maria Keller is the president of Halden Group. "
        "Halden Group is headquartered in Oslo. "
        "The annual dinner went long."
    )
    cands = extract(text)
    preds = sorted(c.predicate_raw for c in cands)
    assert preds == ["is headquartered in", "is the president of"]
