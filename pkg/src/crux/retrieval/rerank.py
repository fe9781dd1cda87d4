"""Diversity and plug-in re-ranking over candidate lists."""

from __future__ import annotations

from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from ..errors import UsageError
from .index import RankedList


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def mmr_rerank(
    candidates: RankedList,
    vectors: Mapping[str, np.ndarray],
    lam: float = 0.5,
    k: Optional[int] = None,
) -> RankedList:
    """Maximal marginal relevance: lam * rel - (1 - lam) * max-sim-to-selected.

    Relevance scores are min-max normalized over the candidate list; the first
    pick is by relevance alone. Ties resolve to the earlier candidate, so
    lam=1 reproduces the input order exactly.
    """
    if not 0.0 <= lam <= 1.0:
        raise UsageError("lambda must be in [0, 1]")
    items = list(candidates.candidates)
    if not items:
        return RankedList(candidates.topic_id, ())
    k = len(items) if k is None else min(k, len(items))

    raw = [score for _, score in items]
    lo, hi = min(raw), max(raw)
    rel = [1.0 if hi == lo else (s - lo) / (hi - lo) for s in raw]
    vecs = [np.asarray(vectors[pid]) for pid, _ in items]

    selected: list[int] = []
    remaining = list(range(len(items)))
    max_sim = [0.0] * len(items)
    while len(selected) < k:
        best_i, best_score = None, -np.inf
        for i in remaining:
            score = rel[i] if not selected else lam * rel[i] - (1.0 - lam) * max_sim[i]
            if score > best_score:
                best_i, best_score = i, score
        selected.append(best_i)
        remaining.remove(best_i)
        for i in remaining:
            max_sim[i] = max(max_sim[i], _cosine(vecs[i], vecs[best_i]))

    n = len(selected)
    return RankedList(
        candidates.topic_id,
        tuple((items[i][0], float(n - rank)) for rank, i in enumerate(selected)),
    )


Scorer = Callable[[str, Sequence[tuple[str, str]]], Union[Sequence[float], Sequence[str]]]


def external_rerank(
    query: str,
    candidates: RankedList,
    texts: Mapping[str, str],
    scorer: Scorer,
) -> RankedList:
    """Reorder candidates by an injected scorer (pointwise scores or a full
    permutation of passage ids). Set membership is preserved.
    """
    items = [(pid, texts.get(pid, "")) for pid, _ in candidates.candidates]
    result = list(scorer(query, items))
    if len(result) != len(items):
        raise UsageError(
            f"scorer returned {len(result)} values for {len(items)} candidates"
        )
    ids = [pid for pid, _ in items]
    if result and isinstance(result[0], str):
        if sorted(result) != sorted(ids):
            raise UsageError("scorer permutation does not match candidate set")
        order = list(result)
    else:
        scored = sorted(zip(ids, result), key=lambda item: -float(item[1]))
        order = [pid for pid, _ in scored]
    n = len(order)
    return RankedList(
        candidates.topic_id,
        tuple((pid, float(n - rank)) for rank, pid in enumerate(order)),
    )
