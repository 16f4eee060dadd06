"""From-scratch inverted index with Okapi BM25 scoring.

Documents are append-only: records never change their text, so postings
only grow. Corpus statistics (N, df, average length) always reflect the
whole index; scoring can be restricted to a candidate mask.
"""
from __future__ import annotations

import math
import re
from typing import Optional, Sequence

import numpy as np

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Case-fold and split on non-alphanumeric runs."""
    return _TOKEN.findall(text.casefold())


class _Postings:
    __slots__ = ("handles", "tfs", "_cache", "_cached_len")

    def __init__(self) -> None:
        self.handles: list[int] = []
        self.tfs: list[int] = []
        self._cache: Optional[tuple[np.ndarray, np.ndarray]] = None
        self._cached_len = 0

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._cache is None or self._cached_len != len(self.handles):
            self._cache = (
                np.asarray(self.handles, dtype=np.int64),
                np.asarray(self.tfs, dtype=np.float64),
            )
            self._cached_len = len(self.handles)
        return self._cache


class Bm25Index:
    def __init__(self, k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self._postings: dict[str, _Postings] = {}
        self._doc_len: list[int] = []
        self._doc_len_cache: Optional[np.ndarray] = None
        self._total_len = 0

    @property
    def size(self) -> int:
        return len(self._doc_len)

    def add(self, handle: int, text: str) -> None:
        """Index one document; handle must equal the current size."""
        if handle != len(self._doc_len):
            raise ValueError(f"handles must be dense: got {handle}, expected {len(self._doc_len)}")
        tokens = tokenize(text)
        self._doc_len.append(len(tokens))
        self._total_len += len(tokens)
        self._doc_len_cache = None
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for tok, tf in counts.items():
            post = self._postings.get(tok)
            if post is None:
                post = self._postings[tok] = _Postings()
            post.handles.append(handle)
            post.tfs.append(tf)

    def _doc_lens(self) -> np.ndarray:
        if self._doc_len_cache is None or len(self._doc_len_cache) != len(self._doc_len):
            self._doc_len_cache = np.asarray(self._doc_len, dtype=np.float64)
        return self._doc_len_cache

    def idf(self, term: str) -> float:
        post = self._postings.get(term)
        if post is None:
            return 0.0
        n = len(self._doc_len)
        df = len(post.handles)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def scores(self, terms: Sequence[str]) -> np.ndarray:
        """Dense BM25 score vector over all handles for the term multiset."""
        n = len(self._doc_len)
        out = np.zeros(n, dtype=np.float64)
        if n == 0:
            return out
        avgdl = self._total_len / n if self._total_len else 1.0
        lens = self._doc_lens()
        for term in terms:
            post = self._postings.get(term)
            if post is None:
                continue
            handles, tfs = post.arrays()
            idf = math.log(1.0 + (n - len(post.handles) + 0.5) / (len(post.handles) + 0.5))
            denom = tfs + self.k1 * (1.0 - self.b + self.b * lens[handles] / avgdl)
            out[handles] += idf * (tfs * (self.k1 + 1.0)) / denom
        return out

    def search_arrays(
        self,
        terms: Sequence[str],
        mask: Optional[np.ndarray] = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """All positive-scoring (handles, scores) as parallel arrays."""
        scores = self.scores(terms)
        if mask is not None:
            scores = np.where(mask, scores, 0.0)
        hits = np.nonzero(scores > 0.0)[0]
        return hits, scores[hits]

    def search(
        self,
        terms: Sequence[str],
        k: int,
        mask: Optional[np.ndarray] = None,
    ) -> list[tuple[int, float]]:
        """Top-k (handle, score) with score > 0, unordered ties included.

        Callers order ties; this returns at least k best-scoring handles
        (all handles tied at the boundary score are included).
        """
        hits, vals = self.search_arrays(terms, mask)
        if hits.size == 0:
            return []
        if hits.size > k:
            top = np.argpartition(vals, hits.size - k)[hits.size - k :]
            boundary = vals[top].min()
            keep = vals >= boundary
            hits, vals = hits[keep], vals[keep]
        return [(int(h), float(s)) for h, s in zip(hits, vals)]
