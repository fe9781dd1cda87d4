"""Rank correlation and agreement statistics.

Kendall tau is the tie-corrected tau-b variant; Spearman rank-transforms with
average ranks for ties. Both delegate to scipy behind input validation. Fleiss
kappa is computed directly from category counts.
"""

from __future__ import annotations

import math
from typing import Hashable, Optional, Sequence

from scipy import stats as _scipy_stats

from .errors import UndefinedMetricError, UsageError


def _check_pair(x: Sequence[float], y: Sequence[float]) -> None:
    if len(x) != len(y):
        raise UsageError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise UsageError("need at least 2 observations")
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise UndefinedMetricError("correlation undefined for a constant list")


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    _check_pair(x, y)
    tau = _scipy_stats.kendalltau(x, y, variant="b").statistic
    if math.isnan(tau):
        raise UndefinedMetricError("kendall tau undefined for these inputs")
    return float(tau)


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    _check_pair(x, y)
    rho = _scipy_stats.spearmanr(x, y).statistic
    if math.isnan(rho):
        raise UndefinedMetricError("spearman rho undefined for these inputs")
    return float(rho)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    _check_pair(x, y)
    r = _scipy_stats.pearsonr(x, y).statistic
    if math.isnan(r):
        raise UndefinedMetricError("pearson r undefined for these inputs")
    return float(r)


def fleiss_kappa(
    labels: Sequence[Sequence[Hashable]],
    categories: Optional[Sequence[Hashable]] = None,
) -> float:
    """Fleiss kappa over an items x raters matrix of categorical labels."""
    if len(labels) < 2:
        raise UsageError("need at least 2 items")
    n_raters = len(labels[0])
    if n_raters < 2:
        raise UsageError("need at least 2 raters")
    for row in labels:
        if len(row) != n_raters:
            raise UsageError("incomplete label matrix: unequal rater counts")
        if any(label is None for label in row):
            raise UsageError("incomplete label matrix: missing label")

    if categories is None:
        categories = sorted({label for row in labels for label in row}, key=repr)
    cat_index = {c: i for i, c in enumerate(categories)}

    counts = []
    for row in labels:
        cnt = [0] * len(categories)
        for label in row:
            try:
                cnt[cat_index[label]] += 1
            except KeyError:
                raise UsageError(f"label {label!r} not in categories") from None
        counts.append(cnt)

    n_items = len(counts)
    total = n_items * n_raters
    p_j = [sum(cnt[j] for cnt in counts) / total for j in range(len(categories))]
    p_i = [
        (sum(c * c for c in cnt) - n_raters) / (n_raters * (n_raters - 1))
        for cnt in counts
    ]
    p_bar = sum(p_i) / n_items
    p_exp = sum(p * p for p in p_j)
    if p_exp == 1.0:
        return 1.0 if p_bar == 1.0 else 0.0
    return (p_bar - p_exp) / (1.0 - p_exp)


def judge_vs_human(
    llm_ratings: Sequence[int],
    human_ratings: Sequence[int],
    eta: int = 3,
) -> dict[str, dict[str, float]]:
    """Per-class precision/recall of LLM ratings against human ground truth,
    both binarized at eta. Classes with an empty denominator score 0.0."""
    if not llm_ratings:
        raise UsageError("empty rating lists")
    if len(llm_ratings) != len(human_ratings):
        raise UsageError(f"length mismatch: {len(llm_ratings)} vs {len(human_ratings)}")

    llm = [r >= eta for r in llm_ratings]
    human = [r >= eta for r in human_ratings]

    def stats_for(positive: bool) -> dict[str, float]:
        tp = sum(1 for a, b in zip(llm, human) if a == positive and b == positive)
        pred = sum(1 for a in llm if a == positive)
        actual = sum(1 for b in human if b == positive)
        return {
            "precision": tp / pred if pred else 0.0,
            "recall": tp / actual if actual else 0.0,
        }

    return {"answerable": stats_for(True), "unanswerable": stats_for(False)}
