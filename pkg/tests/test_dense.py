"""Dense channel: reference embedder determinism and HNSW recall."""
import numpy as np
import pytest

from nuggetbase.index.dense import DenseIndex, HashedTrigramEmbedder, HnswGraph


def test_embedder_deterministic():
    emb = HashedTrigramEmbedder()
    a = emb.embed("Acme Corp is headquartered in Lisbon.")
    b = emb.embed("Acme Corp is headquartered in Lisbon.")
    assert np.array_equal(a, b)


def test_embedder_unit_norm():
    emb = HashedTrigramEmbedder()
    v = emb.embed("Acme Corp is headquartered in Lisbon.")
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)
    assert float(v @ v) == pytest.approx(1.0, abs=1e-6)


def test_embedder_folds_case_and_spacing():
    emb = HashedTrigramEmbedder()
    assert np.array_equal(emb.embed("Hello  World"), emb.embed("hello world"))


def test_embedder_handles_short_and_empty_text():
    emb = HashedTrigramEmbedder()
    short = emb.embed("ab")
    assert np.linalg.norm(short) == pytest.approx(1.0)
    empty = emb.embed("")
    assert np.linalg.norm(empty) == pytest.approx(1.0)


def test_embedder_orders_related_text_first():
    emb = HashedTrigramEmbedder()
    q = emb.embed("acme corp is based in lisbon")
    near = emb.embed("acme corp is based in lisbon today")
    far = emb.embed("migratory herons favor shallow estuaries")
    assert float(q @ near) > float(q @ far)


def unit_rows(n, dim, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, dim))
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def test_hnsw_finds_exact_match():
    vecs = unit_rows(200, 32, seed=7)
    graph = HnswGraph(dim=32, seed=0)
    for v in vecs:
        graph.insert(v)
    for probe in (0, 57, 199):
        hits = graph.search(vecs[probe], k=1)
        assert hits[0][0] == probe
        assert hits[0][1] == pytest.approx(1.0, abs=1e-9)


def test_hnsw_overlap_with_brute_force():
    vecs = unit_rows(300, 32, seed=11)
    queries = unit_rows(20, 32, seed=13)
    graph = HnswGraph(dim=32, seed=0)
    for v in vecs:
        graph.insert(v)
    k = 10
    overlaps = []
    for q in queries:
        exact = set(np.argsort(-(vecs @ q))[:k])
        approx = {n for n, _ in graph.search(q, k=k)}
        overlaps.append(len(exact & approx) / k)
    assert np.mean(overlaps) >= 0.9


def test_dense_index_requires_dense_handles():
    idx = DenseIndex()
    idx.add(0, "first entry")
    idx.add(1, "second entry")
    with pytest.raises(ValueError):
        idx.add(5, "skips ahead")


def test_dense_index_empty_search():
    idx = DenseIndex()
    q = idx.embedder.embed("anything")
    assert idx.search(q, k=3) == []


def test_dense_index_mask_filters():
    idx = DenseIndex()
    texts = [
        "acme corp is based in lisbon",
        "acme corp is based in porto",
        "herons favor shallow estuaries",
    ]
    for h, t in enumerate(texts):
        idx.add(h, t)
    q = idx.embedder.embed("where is acme corp based")
    mask = np.array([False, True, True])
    hits = idx.search(q, k=3, mask=mask)
    handles = {h for h, _ in hits}
    assert 0 not in handles
    assert handles <= {1, 2}


def test_dense_index_empty_mask():
    idx = DenseIndex()
    idx.add(0, "only entry")
    q = idx.embedder.embed("only entry")
    assert idx.search(q, k=1, mask=np.array([False])) == []


def test_graph_and_brute_force_paths_agree():
    texts = [f"entity number {i} holds office in city {i % 7}" for i in range(50)]
    exact = DenseIndex(brute_force_below=1000)
    graph = DenseIndex(brute_force_below=1)
    for h, t in enumerate(texts):
        exact.add(h, t)
        graph.add(h, t)
    q = exact.embedder.embed("entity number 17 holds office")
    top_exact = {h for h, _ in sorted(exact.search(q, k=5), key=lambda p: -p[1])[:5]}
    top_graph = {h for h, _ in graph.search(q, k=5)}
    assert len(top_exact & top_graph) >= 4
