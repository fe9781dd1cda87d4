"""Embedding-based exhaustive search.

Concrete neural encoders are external; any object with ``embed(text)`` and a
fixed ``dim`` plugs in. ``HashingEmbedder`` is a deterministic offline provider
(feature-hashed bag of words, L2-normalized) used for tests and mock runs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np

from ..errors import UsageError
from ..models import Passage
from .index import RankedList


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Deterministic bag-of-words embedding via feature hashing."""

    def __init__(self, dim: int = 256):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for word in text.lower().split():
            digest = hashlib.md5(word.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "little") % self.dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


@dataclass(frozen=True)
class CorpusEmbeddings:
    passage_ids: tuple[str, ...]
    matrix: np.ndarray  # shape (n_passages, dim)

    def vector(self, passage_id: str) -> np.ndarray:
        return self.matrix[self.passage_ids.index(passage_id)]


def embed_corpus(provider: EmbeddingProvider, corpus: Iterable[Passage]) -> CorpusEmbeddings:
    passages = list(corpus)
    matrix = np.stack([provider.embed(p.text) for p in passages]) if passages else np.zeros((0, provider.dim))
    return CorpusEmbeddings(tuple(p.passage_id for p in passages), matrix)


def dense_search(
    provider: EmbeddingProvider,
    embeddings: CorpusEmbeddings,
    query: str,
    k: int,
    *,
    topic_id: str = "",
) -> RankedList:
    if k < 1:
        raise UsageError("k must be >= 1")
    query_vec = np.asarray(provider.embed(query))
    if embeddings.matrix.shape[1] != query_vec.shape[0]:
        raise UsageError(
            f"dimension mismatch: corpus {embeddings.matrix.shape[1]}, query {query_vec.shape[0]}"
        )
    scores = embeddings.matrix @ query_vec
    order = sorted(
        range(len(embeddings.passage_ids)),
        key=lambda i: (-scores[i], embeddings.passage_ids[i]),
    )[:k]
    return RankedList(
        topic_id,
        tuple((embeddings.passage_ids[i], float(scores[i])) for i in order),
    )
