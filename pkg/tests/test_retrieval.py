"""Scoring pieces and context formatting, isolated from the engine."""
from datetime import date

import pytest

from nuggetbase.config import FusionConfig
from nuggetbase.model import (
    GLOBAL,
    EpistemicState,
    Evidence,
    FactTriple,
    NuggetKind,
    NuggetRecord,
    Provenance,
    Rank,
    Status,
    ValidityInterval,
    View,
    compute_nugget_id,
    with_status,
)
from nuggetbase.retrieval import (
    MIN_FETCH_DEPTH,
    Query,
    ScoredNugget,
    fetch_depth,
    format_context,
    fuse_scores,
    metadata_score,
    min_max_normalize,
)

D = date


def make_record(
    obj,
    t_start=D(2020, 1, 1),
    status=Status.ACTIVE,
    rank=Rank.NORMAL,
    confidence=0.5,
    doc="doc-0",
    subject="acme corp",
):
    fact = FactTriple(subject, subject, "is headquartered in", obj, obj)
    r = NuggetRecord(
        id=compute_nugget_id(NuggetKind.SEMANTIC_FACT, fact, GLOBAL, t_start),
        kind=NuggetKind.SEMANTIC_FACT,
        fact=fact,
        text=f"{subject} is headquartered in {obj}.",
        validity=ValidityInterval(t_start=t_start),
        epistemic=EpistemicState(rank=rank, confidence=confidence),
        provenance=Provenance(
            evidence=(Evidence(doc, 0, 30, t_start),),
            created_at=t_start,
            extractor_id="rule@1",
        ),
    )
    if status is not Status.ACTIVE:
        r = with_status(r, status)
    return r


def scored(record, fused=0.5):
    return ScoredNugget(record, fused, 0.0, 0.0, 0.0)


# --- normalization and fusion ------------------------------------------------


def test_min_max_empty():
    assert min_max_normalize({}) == {}


def test_min_max_degenerate_pool_scores_zero():
    assert min_max_normalize({"a": 0.7}) == {"a": 0.0}
    assert min_max_normalize({"a": 0.7, "b": 0.7}) == {"a": 0.0, "b": 0.0}


def test_min_max_spreads_to_unit_range():
    got = min_max_normalize({"a": 1.0, "b": 3.0, "c": 2.0})
    assert got == {"a": 0.0, "b": 1.0, "c": 0.5}


def test_fuse_default_weights():
    w = FusionConfig()
    assert fuse_scores(1.0, 0.0, 0.0, w) == pytest.approx(0.4)
    assert fuse_scores(0.5, 0.2, 1.0, w) == pytest.approx(0.4)
    assert fuse_scores(1.0, 1.0, 1.0, w) == pytest.approx(1.0)


def test_lexical_only_redistribution():
    w = FusionConfig().lexical_only()
    assert (w.lexical, w.dense, w.meta) == (pytest.approx(0.8), 0.0, pytest.approx(0.2))
    # dense channel contributes nothing even when nonzero
    assert fuse_scores(0.5, 0.9, 1.0, w) == pytest.approx(0.6)


def test_normalized_rejects_zero_weights():
    with pytest.raises(ValueError):
        FusionConfig(0.0, 0.0, 0.0).normalized()


def test_metadata_score_rank_scaling():
    base = make_record("lisbon", confidence=0.5)
    assert metadata_score(base) == pytest.approx(0.4)  # 0.5 * 0.8
    preferred = make_record("porto", rank=Rank.PREFERRED, confidence=0.5)
    assert metadata_score(preferred) == pytest.approx(0.5)
    deprecated = make_record("madrid", status=Status.DEPRECATED)
    assert metadata_score(deprecated) == 0.0


def test_fetch_depth_floor():
    assert fetch_depth(10) == MIN_FETCH_DEPTH
    assert fetch_depth(25) == MIN_FETCH_DEPTH
    assert fetch_depth(50) == 200


def test_query_defaults():
    q = Query(text="where is acme corp", t=D(2021, 1, 1))
    assert q.k == 20
    assert q.view is View.ACTIVE
    assert q.scope is None


# --- context formatting ------------------------------------------------------


class FakeEngine:
    def __init__(self, records):
        self._records = list(records)

    def records_for_key(self, key):
        return [r for r in self._records if r.key == key]


def test_context_empty():
    assert format_context([], View.ACTIVE) == ""


def test_context_active_only_block():
    a = make_record("lisbon")
    b = make_record("porto", subject="vex ltd")
    got = format_context([scored(a), scored(b)], View.ACTIVE)
    assert got == (
        "Established facts:\n"
        "- acme corp is headquartered in lisbon.\n"
        "- vex ltd is headquartered in porto."
    )


def test_context_hides_disputes_in_active_view():
    a = make_record("lisbon")
    c = make_record("porto", t_start=D(2021, 1, 1), status=Status.CONTESTED)
    got = format_context([scored(a), scored(c)], View.ACTIVE)
    assert "Disputed" not in got
    assert "porto" not in got


def test_context_disputed_block_lists_rival_sources():
    older = make_record("lisbon", status=Status.CONTESTED, doc="news-14")
    newer = make_record(
        "porto", t_start=D(2021, 6, 1), status=Status.CONTESTED, doc="wire-3"
    )
    engine = FakeEngine([older, newer])
    got = format_context(
        [scored(older), scored(newer)], View.ACTIVE_PLUS_CONTESTED, engine
    )
    assert got == (
        "Established facts:\n"
        "\n"
        "Disputed (sources disagree):\n"
        "- acme corp is headquartered in lisbon.: "
        "Source news-14 says lisbon, Source wire-3 says porto"
    )


def test_context_one_disputed_line_per_key():
    older = make_record("lisbon", status=Status.CONTESTED, doc="news-14")
    newer = make_record(
        "porto", t_start=D(2021, 6, 1), status=Status.CONTESTED, doc="wire-3"
    )
    engine = FakeEngine([older, newer])
    got = format_context(
        [scored(older), scored(newer)], View.ACTIVE_PLUS_CONTESTED, engine
    )
    assert got.count("Source news-14") == 1
    assert got.count("\n- ") == 1


def test_context_mixes_active_and_disputed():
    fact = make_record("lisbon", subject="orno ltd")
    older = make_record("lisbon", status=Status.CONTESTED, doc="news-14")
    newer = make_record(
        "porto", t_start=D(2021, 6, 1), status=Status.CONTESTED, doc="wire-3"
    )
    engine = FakeEngine([fact, older, newer])
    got = format_context(
        [scored(fact), scored(older)], View.ACTIVE_PLUS_CONTESTED, engine
    )
    lines = got.splitlines()
    assert lines[0] == "Established facts:"
    assert lines[1] == "- orno ltd is headquartered in lisbon."
    assert lines[2] == ""
    assert lines[3] == "Disputed (sources disagree):"
