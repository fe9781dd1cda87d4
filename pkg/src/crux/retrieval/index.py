"""Inverted index and Okapi BM25 scoring.

BM25 parameters default to k1=0.9, b=0.4 with the +1-inside-log idf variant:
idf = ln(1 + (N - df + 0.5) / (df + 0.5)). Ranking ties break by passage id
ascending, making results stable under corpus permutation.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from ..errors import InvariantError, UsageError
from ..models import Passage
from .stopwords import ENGLISH_STOPWORDS

_TOKEN = re.compile(r"\w+", re.UNICODE)

Analyzer = Callable[[str], list[str]]


def default_analyzer(text: str) -> list[str]:
    """Lowercase, split on whitespace/punctuation, drop English stopwords."""
    return [t for t in _TOKEN.findall(text.lower()) if t not in ENGLISH_STOPWORDS]


def plain_analyzer(text: str) -> list[str]:
    """Analyzer without stopword removal (used by hand-checked tests)."""
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class RankedList:
    topic_id: str
    candidates: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        ids = [pid for pid, _ in self.candidates]
        if len(set(ids)) != len(ids):
            raise InvariantError(f"ranked list {self.topic_id!r}: duplicate passage id")
        scores = [s for _, s in self.candidates]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise InvariantError(f"ranked list {self.topic_id!r}: scores increase with rank")

    @property
    def passage_ids(self) -> tuple[str, ...]:
        return tuple(pid for pid, _ in self.candidates)


@dataclass(frozen=True)
class InvertedIndex:
    postings: Mapping[str, tuple[tuple[str, int], ...]]  # term -> ((passage_id, tf), ...)
    doc_lengths: Mapping[str, int]
    n_docs: int
    avgdl: float
    doc_freqs: Mapping[str, int]
    analyzer: Analyzer = field(compare=False)


def build_index(corpus: Iterable[Passage], analyzer: Analyzer = default_analyzer) -> InvertedIndex:
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for passage in corpus:
        if passage.passage_id in doc_lengths:
            raise InvariantError(f"duplicate passage_id {passage.passage_id!r}")
        terms = analyzer(passage.text)
        doc_lengths[passage.passage_id] = len(terms)
        for term, tf in Counter(terms).items():
            postings.setdefault(term, []).append((passage.passage_id, tf))
    if not doc_lengths:
        raise UsageError("cannot index an empty corpus")
    n_docs = len(doc_lengths)
    frozen = {term: tuple(sorted(plist)) for term, plist in postings.items()}
    return InvertedIndex(
        postings=frozen,
        doc_lengths=doc_lengths,
        n_docs=n_docs,
        avgdl=sum(doc_lengths.values()) / n_docs,
        doc_freqs={term: len(plist) for term, plist in frozen.items()},
        analyzer=analyzer,
    )


ANALYZERS: dict[str, Analyzer] = {
    "default": default_analyzer,
    "plain": plain_analyzer,
}


def save_index(index: InvertedIndex, path: str) -> None:
    import json

    name = next(
        (n for n, fn in ANALYZERS.items() if fn is index.analyzer), "default"
    )
    payload = {
        "analyzer": name,
        "doc_lengths": dict(index.doc_lengths),
        "postings": {term: [list(p) for p in plist] for term, plist in index.postings.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_index(path: str) -> InvertedIndex:
    import json

    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    doc_lengths = {pid: int(n) for pid, n in payload["doc_lengths"].items()}
    postings = {
        term: tuple((pid, int(tf)) for pid, tf in plist)
        for term, plist in payload["postings"].items()
    }
    n_docs = len(doc_lengths)
    if n_docs == 0:
        raise UsageError(f"{path}: empty index")
    return InvertedIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        n_docs=n_docs,
        avgdl=sum(doc_lengths.values()) / n_docs,
        doc_freqs={term: len(plist) for term, plist in postings.items()},
        analyzer=ANALYZERS[payload.get("analyzer", "default")],
    )


def bm25_idf(n_docs: int, df: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def bm25_search(
    index: InvertedIndex,
    query: str,
    k: int,
    *,
    topic_id: str = "",
    k1: float = 0.9,
    b: float = 0.4,
) -> RankedList:
    if k < 1:
        raise UsageError("k must be >= 1")
    scores: dict[str, float] = {}
    for term in set(index.analyzer(query)):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = bm25_idf(index.n_docs, index.doc_freqs[term])
        for pid, tf in plist:
            norm = k1 * (1.0 - b + b * index.doc_lengths[pid] / index.avgdl)
            scores[pid] = scores.get(pid, 0.0) + idf * tf * (k1 + 1.0) / (tf + norm)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))[:k]
    return RankedList(topic_id, tuple(ranked))
