import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crux.errors import MissingRatingError, UndefinedMetricError, UsageError
from crux.metrics import (
    MatrixLookup,
    alpha_ndcg,
    answerability_of_context,
    coverage,
    density,
    greedy_ideal_order,
    relevance_metrics,
)
from crux.models import RatingMatrix


def lookup_from(cols):
    """Build a MatrixLookup from {passage_id: [ratings per question]}."""
    pids = tuple(cols)
    n_q = len(next(iter(cols.values())))
    ratings = tuple(tuple(cols[pid][i] for pid in pids) for i in range(n_q))
    return MatrixLookup(RatingMatrix("t", pids, ratings))


class TestAnswerability:
    def test_max_aggregation_across_passages(self):
        lookup = lookup_from({"a": [2, 5], "b": [3, 0]})
        bits = answerability_of_context(lookup, [0, 1], ["a", "b"], eta=3)
        assert bits == (True, True)

    def test_single_weak_passage(self):
        lookup = lookup_from({"a": [2, 5], "b": [3, 0]})
        assert answerability_of_context(lookup, [0, 1], ["a"], eta=3) == (False, True)

    def test_empty_context_answers_nothing(self):
        lookup = lookup_from({"a": [5]})
        assert answerability_of_context(lookup, [0], [], eta=3) == (False,)

    def test_missing_passage_raises(self):
        lookup = lookup_from({"a": [5]})
        with pytest.raises(MissingRatingError, match="zzz"):
            answerability_of_context(lookup, [0], ["zzz"])


class TestCoverage:
    def test_fraction(self):
        assert coverage((True, False, True, True)) == pytest.approx(0.75)

    def test_empty_undefined(self):
        with pytest.raises(UndefinedMetricError):
            coverage(())

    @settings(max_examples=100, deadline=None)
    @given(data=st.data(), n_q=st.integers(1, 6), n_p=st.integers(1, 6))
    def test_threshold_monotonicity(self, data, n_q, n_p):
        # Raising the rating threshold can only shrink the answerable set.
        cols = {
            f"p{j}": [data.draw(st.integers(0, 5)) for _ in range(n_q)]
            for j in range(n_p)
        }
        lookup = lookup_from(cols)
        ctx = [f"p{j}" for j in range(n_p) if data.draw(st.booleans())]
        idxs = list(range(n_q))
        loose = answerability_of_context(lookup, idxs, ctx, eta=3)
        strict = answerability_of_context(lookup, idxs, ctx, eta=5)
        for s, l in zip(strict, loose):
            assert not s or l
        assert coverage(strict) <= coverage(loose)


def naive_novelty_dcg(order, cols, idxs, eta, alpha):
    """Independent re-derivation: per-rank novelty gain over answered questions."""
    counts = {i: 0 for i in idxs}
    total = 0.0
    for rank, pid in enumerate(order, start=1):
        gain = 0.0
        for i in idxs:
            if cols[pid][i] >= eta:
                gain += (1 - alpha) ** counts[i]
                counts[i] += 1
        total += gain / math.log2(rank + 1)
    return total


class TestRankedCoverage:
    # Two questions, two passages. pA answers q0 only; pB answers both.
    # Observed order [pA, pB]: DCG = 1 + (0.5 + 1)/log2(3).
    # Ideal (greedy) order [pB, pA]: IDCG = 2 + 0.5/log2(3).
    COLS = {"pA": [5, 0], "pB": [4, 5]}

    def test_worked_example(self):
        lookup = lookup_from(self.COLS)
        ideal = greedy_ideal_order(["pA", "pB"], lookup, [0, 1])
        assert ideal == ["pB", "pA"]
        value = alpha_ndcg(["pA", "pB"], lookup, [0, 1], ideal)
        expected = (1 + 1.5 / math.log2(3)) / (2 + 0.5 / math.log2(3))
        assert value == pytest.approx(expected, abs=1e-9)
        assert value == pytest.approx(0.8406, abs=1e-4)

    def test_ideal_order_scores_one(self):
        lookup = lookup_from(self.COLS)
        ideal = greedy_ideal_order(["pA", "pB"], lookup, [0, 1])
        assert alpha_ndcg(ideal, lookup, [0, 1], ideal) == pytest.approx(1.0)

    def test_can_exceed_one(self):
        # A longer context can out-gain a shorter ideal set; no clamping.
        cols = {"pA": [5, 0], "pB": [0, 5]}
        lookup = lookup_from(cols)
        value = alpha_ndcg(["pA", "pB"], lookup, [0, 1], ["pA"])
        assert value > 1.0

    def test_zero_gain_ideal_undefined(self):
        lookup = lookup_from({"pA": [0]})
        with pytest.raises(UndefinedMetricError):
            alpha_ndcg(["pA"], lookup, [0], ["pA"])

    def test_redundant_duplicates_decay(self):
        # The same question answered thrice gains 1, 0.5, then 0.25.
        cols = {"pA": [5], "pB": [5], "pC": [5]}
        lookup = lookup_from(cols)
        dcg = naive_novelty_dcg(["pA", "pB", "pC"], cols, [0], 3, 0.5)
        expected = 1.0 + 0.5 / math.log2(3) + 0.25 / math.log2(4)
        assert dcg == pytest.approx(expected)
        ideal = greedy_ideal_order(["pA", "pB", "pC"], lookup, [0])
        assert alpha_ndcg(["pA", "pB", "pC"], lookup, [0], ideal) == pytest.approx(1.0)

    @settings(max_examples=150, deadline=None)
    @given(data=st.data(), n_q=st.integers(1, 5), n_p=st.integers(1, 6))
    def test_matches_naive_enumeration(self, data, n_q, n_p):
        cols = {
            f"p{j}": [data.draw(st.integers(0, 5)) for _ in range(n_q)]
            for j in range(n_p)
        }
        if not any(r >= 3 for ratings in cols.values() for r in ratings):
            cols["p0"][0] = 5
        lookup = lookup_from(cols)
        idxs = list(range(n_q))
        pids = list(cols)
        order = data.draw(st.permutations(pids))
        ideal = greedy_ideal_order(pids, lookup, idxs)

        got = alpha_ndcg(order, lookup, idxs, ideal)
        want = naive_novelty_dcg(order, cols, idxs, 3, 0.5) / naive_novelty_dcg(
            ideal, cols, idxs, 3, 0.5
        )
        assert got == pytest.approx(want, abs=1e-12)

    def test_greedy_ideal_matches_exhaustive_on_small_sets(self):
        rng = random.Random(11)
        for _ in range(30):
            n_q, n_p = rng.randint(1, 3), rng.randint(1, 4)
            cols = {
                f"p{j}": [rng.randint(0, 5) for _ in range(n_q)] for j in range(n_p)
            }
            if not any(r >= 3 for ratings in cols.values() for r in ratings):
                continue
            lookup = lookup_from(cols)
            idxs = list(range(n_q))
            ideal = greedy_ideal_order(list(cols), lookup, idxs)
            best = max(
                naive_novelty_dcg(perm, cols, idxs, 3, 0.5)
                for perm in itertools.permutations(cols)
            )
            got = naive_novelty_dcg(ideal, cols, idxs, 3, 0.5)
            assert got == pytest.approx(best, abs=1e-9)


class TestDensity:
    def test_worked_example(self):
        # Half the coverage at twice the tokens: ((0.5/200)/(1.0/100))^0.5.
        assert density(0.5, 200, 1.0, 100) == pytest.approx(0.5)

    def test_identity_when_equal(self):
        assert density(1.0, 100, 1.0, 100) == pytest.approx(1.0)

    def test_exceeds_one_when_denser(self):
        assert density(1.0, 50, 1.0, 100) > 1.0

    def test_zero_tokens_undefined(self):
        with pytest.raises(UndefinedMetricError):
            density(0.5, 0, 1.0, 100)

    def test_zero_reference_coverage_undefined(self):
        with pytest.raises(UndefinedMetricError):
            density(0.5, 10, 0.0, 100)

    def test_tempering_exponent(self):
        full = (0.5 / 200) / (1.0 / 100)
        assert density(0.5, 200, 1.0, 100, w=1.0) == pytest.approx(full)
        assert density(0.5, 200, 1.0, 100, w=0.5) == pytest.approx(math.sqrt(full))


class TestRelevanceMetrics:
    def test_hand_checked(self):
        # relevant = {a, c, e}; ranking a, b, c, d at k=4.
        out = relevance_metrics(["a", "b", "c", "d"], {"a", "c", "e"}, k=4)
        assert out["recall"] == pytest.approx(2 / 3)
        assert out["map"] == pytest.approx((1 / 1 + 2 / 3) / 3)
        idcg = 1.0 + 1.0 / math.log2(3) + 1.0 / math.log2(4)
        dcg = 1.0 + 1.0 / math.log2(4)
        assert out["ndcg"] == pytest.approx(dcg / idcg)

    def test_perfect_ranking(self):
        out = relevance_metrics(["a", "b"], {"a", "b"}, k=2)
        assert out == {"recall": 1.0, "map": 1.0, "ndcg": 1.0}

    def test_cutoff_hides_late_hit(self):
        out = relevance_metrics(["x", "y", "a"], {"a"}, k=2)
        assert out["recall"] == 0.0
        assert out["ndcg"] == 0.0

    def test_no_relevant_undefined(self):
        with pytest.raises(UndefinedMetricError):
            relevance_metrics(["a"], set(), k=1)

    def test_bad_k(self):
        with pytest.raises(UsageError):
            relevance_metrics(["a"], {"a"}, k=0)
