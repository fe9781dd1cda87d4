"""Answerability-based metrics: coverage, ranked coverage, density, plus
classical binary-relevance ranking metrics.

All values live in [0, 1] internally (density may exceed 1 when a context
out-performs the oracle reference); reports render them x100.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from .errors import MissingRatingError, UndefinedMetricError, UsageError
from .models import RatingMatrix

DEFAULT_ETA = 3
DEFAULT_ALPHA = 0.5
DEFAULT_W = 0.5


@dataclass(frozen=True)
class MetricConfig:
    eta: int = DEFAULT_ETA
    alpha: float = DEFAULT_ALPHA
    w: float = DEFAULT_W


class RatingLookup(Protocol):
    """Rating source for (question index, passage id) pairs."""

    def rating(self, question_idx: int, passage_id: str) -> int: ...


class MatrixLookup:
    """Lookup backed by a topic's pre-judged rating matrix."""

    def __init__(self, matrix: RatingMatrix):
        self._matrix = matrix
        self._col = {pid: j for j, pid in enumerate(matrix.passage_ids)}

    def rating(self, question_idx: int, passage_id: str) -> int:
        j = self._col.get(passage_id)
        if j is None:
            raise MissingRatingError(
                f"passage {passage_id!r} has no pre-judged ratings; judge it on demand"
            )
        return self._matrix.ratings[question_idx][j]


def answerability_of_context(
    lookup: RatingLookup,
    question_idxs: Sequence[int],
    context_passage_ids: Sequence[str],
    eta: int = DEFAULT_ETA,
) -> tuple[bool, ...]:
    """Max-aggregated, thresholded answerability bit per answerable question."""
    bits = []
    for i in question_idxs:
        best = max((lookup.rating(i, pid) for pid in context_passage_ids), default=0)
        bits.append(best >= eta)
    return tuple(bits)


def coverage(bits: Sequence[bool]) -> float:
    if not bits:
        raise UndefinedMetricError("coverage undefined with zero answerable questions")
    return sum(bits) / len(bits)


def _novelty_dcg(
    passage_ids: Sequence[str],
    lookup: RatingLookup,
    question_idxs: Sequence[int],
    eta: int,
    alpha: float,
) -> float:
    seen = {i: 0 for i in question_idxs}
    dcg = 0.0
    for rank, pid in enumerate(passage_ids, start=1):
        answered = [i for i in question_idxs if lookup.rating(i, pid) >= eta]
        gain = sum((1.0 - alpha) ** seen[i] for i in answered)
        dcg += gain / math.log2(rank + 1)
        for i in answered:
            seen[i] += 1
    return dcg


def greedy_ideal_order(
    candidate_ids: Sequence[str],
    lookup: RatingLookup,
    question_idxs: Sequence[int],
    eta: int = DEFAULT_ETA,
    alpha: float = DEFAULT_ALPHA,
) -> list[str]:
    """Greedy maximal-novelty-gain ordering of a passage set; ties keep the
    candidate order. Used as the ideal reference for ranked coverage."""
    remaining = list(candidate_ids)
    seen = {i: 0 for i in question_idxs}
    order: list[str] = []
    while remaining:
        best_pid, best_gain = None, -1.0
        for pid in remaining:
            gain = sum(
                (1.0 - alpha) ** seen[i]
                for i in question_idxs
                if lookup.rating(i, pid) >= eta
            )
            if gain > best_gain:
                best_pid, best_gain = pid, gain
        order.append(best_pid)
        remaining.remove(best_pid)
        for i in question_idxs:
            if lookup.rating(i, best_pid) >= eta:
                seen[i] += 1
    return order


def alpha_ndcg(
    context_passage_ids: Sequence[str],
    lookup: RatingLookup,
    question_idxs: Sequence[int],
    ideal_passage_ids: Sequence[str],
    eta: int = DEFAULT_ETA,
    alpha: float = DEFAULT_ALPHA,
) -> float:
    """Position-discounted, redundancy-penalized coverage normalized by the
    ideal ordering. Values above 1 are possible when the context out-gains the
    ideal's own set and are reported as-is."""
    idcg = _novelty_dcg(ideal_passage_ids, lookup, question_idxs, eta, alpha)
    if idcg == 0.0:
        raise UndefinedMetricError("ranked coverage undefined: ideal context has no gain")
    return _novelty_dcg(context_passage_ids, lookup, question_idxs, eta, alpha) / idcg


def density(
    cov_z: float,
    tokens_z: int,
    cov_zstar: float,
    tokens_zstar: int,
    w: float = DEFAULT_W,
) -> float:
    """Token-normalized coverage relative to the oracle context, tempered by w."""
    if tokens_z <= 0 or tokens_zstar <= 0:
        raise UndefinedMetricError("density undefined with zero tokens")
    if cov_zstar <= 0:
        raise UndefinedMetricError("density undefined with zero reference coverage")
    return ((cov_z / tokens_z) / (cov_zstar / tokens_zstar)) ** w


def relevance_metrics(
    ranked_passage_ids: Sequence[str],
    relevant_ids: set[str] | frozenset[str],
    k: int,
) -> dict[str, float]:
    """Binary-relevance Recall/MAP/nDCG at cutoff k (log2 discount)."""
    if k < 1:
        raise UsageError("k must be >= 1")
    if not relevant_ids:
        raise UndefinedMetricError("relevance metrics undefined without relevant passages")
    top = list(ranked_passage_ids[:k])
    n_rel = len(relevant_ids)

    hits = 0
    precision_sum = 0.0
    dcg = 0.0
    for rank, pid in enumerate(top, start=1):
        if pid in relevant_ids:
            hits += 1
            precision_sum += hits / rank
            dcg += 1.0 / math.log2(rank + 1)
    idcg = sum(1.0 / math.log2(r + 1) for r in range(1, min(n_rel, k) + 1))
    return {
        "recall": hits / n_rel,
        "map": precision_sum / n_rel,
        "ndcg": dcg / idcg if idcg > 0 else 0.0,
    }
