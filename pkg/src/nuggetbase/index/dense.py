"""Dense channel: hashed-trigram reference embedder and an HNSW graph.

The embedder is deterministic across runs and platforms (crc32 feature
hashing, no process salt). The graph is the classic hierarchical
navigable small world structure built from scratch; neighbor selection is
plain nearest-M, which is plenty at embedded scale. Vectors are unit
length, so cosine similarity is a dot product.
"""
from __future__ import annotations

import heapq
import math
import random
import zlib
from typing import Optional, Protocol, Sequence

import numpy as np


class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


class HashedTrigramEmbedder:
    """Signed bucket counts of character 3-grams, L2-normalized."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        folded = " ".join(text.casefold().split())
        vec = np.zeros(self.dim, dtype=np.float64)
        grams = (
            [folded[i : i + 3] for i in range(len(folded) - 2)]
            if len(folded) >= 3
            else ([folded] if folded else [])
        )
        for gram in grams:
            h = zlib.crc32(gram.encode("utf-8"))
            sign = 1.0 if (h >> 31) & 1 == 0 else -1.0
            vec[h % self.dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            vec[zlib.crc32(folded.encode("utf-8")) % self.dim] = 1.0
            return vec
        return vec / norm


class HnswGraph:
    """Approximate nearest neighbors over unit vectors, insert-only."""

    def __init__(
        self,
        dim: int,
        m: int = 32,
        ef_construction: int = 200,
        seed: int = 0,
    ):
        self.dim = dim
        self.m = m
        self.m0 = 2 * m
        self.ef_construction = ef_construction
        self._ml = 1.0 / math.log(m)
        self._rng = random.Random(seed)
        self._vectors: list[np.ndarray] = []
        self._matrix: Optional[np.ndarray] = None
        # neighbors[node][level] -> list of node ids
        self._neighbors: list[list[list[int]]] = []
        self._entry: int = -1
        self._max_level: int = -1

    def __len__(self) -> int:
        return len(self._vectors)

    def matrix(self) -> np.ndarray:
        if self._matrix is None or len(self._matrix) != len(self._vectors):
            self._matrix = (
                np.vstack(self._vectors)
                if self._vectors
                else np.zeros((0, self.dim), dtype=np.float64)
            )
        return self._matrix

    def _dist(self, q: np.ndarray, node: int) -> float:
        return 1.0 - float(np.dot(q, self._vectors[node]))

    def _dists(self, q: np.ndarray, nodes: Sequence[int]) -> np.ndarray:
        mat = self.matrix()
        return 1.0 - mat[list(nodes)] @ q

    def _search_layer(
        self, q: np.ndarray, entry: int, ef: int, level: int
    ) -> list[tuple[float, int]]:
        """Best-first beam search on one layer; returns (dist, node) sorted."""
        d0 = self._dist(q, entry)
        visited = {entry}
        candidates = [(d0, entry)]  # min-heap
        results = [(-d0, entry)]  # max-heap on dist
        while candidates:
            dist, node = heapq.heappop(candidates)
            if dist > -results[0][0]:
                break
            fresh = [n for n in self._neighbors[node][level] if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            dists = self._dists(q, fresh)
            for nd, n in zip(dists, fresh):
                if len(results) < ef or nd < -results[0][0]:
                    heapq.heappush(candidates, (float(nd), n))
                    heapq.heappush(results, (-float(nd), n))
                    if len(results) > ef:
                        heapq.heappop(results)
        return sorted((-d, n) for d, n in results)

    def insert(self, vector: np.ndarray) -> int:
        node = len(self._vectors)
        self._vectors.append(np.asarray(vector, dtype=np.float64))
        self._matrix = None
        level = int(-math.log(max(self._rng.random(), 1e-12)) * self._ml)
        self._neighbors.append([[] for _ in range(level + 1)])
        if self._entry < 0:
            self._entry = node
            self._max_level = level
            return node

        entry = self._entry
        q = self._vectors[node]
        for lvl in range(self._max_level, level, -1):
            entry = self._search_layer(q, entry, 1, lvl)[0][1]
        for lvl in range(min(level, self._max_level), -1, -1):
            found = self._search_layer(q, entry, self.ef_construction, lvl)
            cap = self.m0 if lvl == 0 else self.m
            chosen = [n for _, n in found[:cap]]
            self._neighbors[node][lvl] = chosen
            for other in chosen:
                links = self._neighbors[other][lvl]
                links.append(node)
                if len(links) > cap:
                    # prune to the cap nearest
                    dists = self._dists(self._vectors[other], links)
                    order = np.argsort(dists, kind="stable")[:cap]
                    self._neighbors[other][lvl] = [links[i] for i in order]
            entry = found[0][1]
        if level > self._max_level:
            self._max_level = level
            self._entry = node
        return node

    def search(self, q: np.ndarray, k: int, ef: int = 64) -> list[tuple[int, float]]:
        """Top-k (node, cosine similarity), best first."""
        if self._entry < 0:
            return []
        q = np.asarray(q, dtype=np.float64)
        entry = self._entry
        for lvl in range(self._max_level, 0, -1):
            entry = self._search_layer(q, entry, 1, lvl)[0][1]
        found = self._search_layer(q, entry, max(ef, k), 0)
        return [(n, 1.0 - d) for d, n in found[:k]]


class DenseIndex:
    """Embeds record text and serves filtered similarity queries."""

    def __init__(
        self,
        embedder: Optional[Embedder] = None,
        m: int = 32,
        ef_construction: int = 200,
        ef_search: int = 64,
        seed: int = 0,
        brute_force_below: int = 1000,
    ):
        self.embedder = embedder or HashedTrigramEmbedder()
        self.ef_search = ef_search
        self.brute_force_below = brute_force_below
        self.graph = HnswGraph(
            dim=self.embedder.dim, m=m, ef_construction=ef_construction, seed=seed
        )

    def __len__(self) -> int:
        return len(self.graph)

    def add(self, handle: int, text: str) -> None:
        node = self.graph.insert(self.embedder.embed(text))
        if node != handle:
            raise ValueError(f"dense handles must be dense: got {handle}, expected {node}")

    def search(
        self, q: np.ndarray, k: int, mask: Optional[np.ndarray] = None
    ) -> list[tuple[int, float]]:
        """Filtered top-k (handle, similarity).

        Small candidate sets are scored exactly; otherwise the graph is
        searched with a growing over-fetch and post-filtered.
        """
        total = len(self.graph)
        if total == 0:
            return []
        if mask is None:
            allowed = None
            n_candidates = total
        else:
            allowed = mask
            n_candidates = int(mask.sum())
            if n_candidates == 0:
                return []
        if n_candidates < self.brute_force_below:
            mat = self.graph.matrix()
            if allowed is None:
                sims = mat @ q
                handles = np.arange(total)
            else:
                handles = np.nonzero(allowed)[0]
                sims = mat[handles] @ q
            if handles.size > k:
                top = np.argpartition(sims, handles.size - k)[handles.size - k :]
                boundary = sims[top].min()
                keep = sims >= boundary
                handles, sims = handles[keep], sims[keep]
            return [(int(h), float(s)) for h, s in zip(handles, sims)]

        fetch = max(4 * k, k)
        while True:
            found = self.graph.search(q, fetch, ef=max(self.ef_search, fetch))
            if allowed is None:
                hits = found
            else:
                hits = [(n, s) for n, s in found if allowed[n]]
            if len(hits) >= k or fetch >= total:
                return hits[:k]
            fetch = min(total, fetch * 4)
