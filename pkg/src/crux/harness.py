"""End-to-end evaluation runs.

Orchestrates reference bounds and empirical pipelines over a built dataset:
retrieve, re-rank, assemble under oracle-matched budgets, judge contexts
(pre-judged ratings for oracle passages, cached on-demand judging otherwise),
compute metrics and emit reports suitable for correlation analysis.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from . import metrics
from .errors import ConfigError, UndefinedMetricError
from .gateway.client import Judge, LlmGateway
from .gateway.mock import content_key
from .metrics import MatrixLookup, MetricConfig
from .models import (
    MetricReport,
    Passage,
    RatingMatrix,
    RetrievalContext,
    Topic,
    load_corpus,
    load_matrices,
    load_topics,
    save_corpus,
    save_matrices,
    save_topics,
)
from .retrieval import (
    Budget,
    CorpusEmbeddings,
    EmbeddingProvider,
    RankedList,
    assemble_context,
    bm25_search,
    build_index,
    dense_search,
    embed_corpus,
    external_rerank,
    mmr_rerank,
)
from .tokenization import Tokenizer, whitespace_tokenize


@dataclass
class Dataset:
    topics: list[Topic]
    corpus: dict[str, Passage]
    matrices: dict[str, RatingMatrix]

    def matrix(self, topic_id: str) -> RatingMatrix:
        return self.matrices[topic_id]


def save_dataset(dataset: Dataset, out_dir: str) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    save_topics(dataset.topics, os.path.join(out_dir, "topics.jsonl"))
    save_corpus(dataset.corpus.values(), os.path.join(out_dir, "corpus.jsonl"))
    save_matrices(dataset.matrices.values(), os.path.join(out_dir, "matrices.jsonl"))


def load_dataset(dir_path: str, tokenizer: Tokenizer = whitespace_tokenize) -> Dataset:
    import os

    return Dataset(
        topics=load_topics(os.path.join(dir_path, "topics.jsonl")),
        corpus=load_corpus(os.path.join(dir_path, "corpus.jsonl"), tokenizer),
        matrices=load_matrices(os.path.join(dir_path, "matrices.jsonl")),
    )


class JudgmentCache:
    """Concurrent append-only cache of (question, text) -> rating."""

    def __init__(self):
        self._store: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()
        self.judge_calls = 0

    def get_or_rate(self, question: str, text: str, judge: Judge) -> int:
        key = (content_key(question), content_key(text))
        with self._lock:
            if key in self._store:
                return self._store[key]
        rating = judge.rate(question, text)
        with self._lock:
            self.judge_calls += 1
            return self._store.setdefault(key, rating)


class CachedRatingLookup:
    """Rating lookup that prefers the pre-judged matrix and falls back to
    on-demand judging of non-oracle passages through the shared cache."""

    def __init__(
        self,
        matrix: RatingMatrix,
        questions: Sequence[str],
        corpus: Mapping[str, Passage],
        judge: Judge,
        cache: JudgmentCache,
    ):
        self._matrix_lookup = MatrixLookup(matrix)
        self._oracle = set(matrix.passage_ids)
        self._questions = questions
        self._corpus = corpus
        self._judge = judge
        self._cache = cache

    def rating(self, question_idx: int, passage_id: str) -> int:
        if passage_id in self._oracle:
            return self._matrix_lookup.rating(question_idx, passage_id)
        text = self._corpus[passage_id].text
        return self._cache.get_or_rate(self._questions[question_idx], text, self._judge)


@dataclass
class PipelineConfig:
    method: str = "bm25"  # bm25 | dense
    reranker: Optional[str] = None  # None | mmr | plugin
    k_policy: str = "oracle_size"  # oracle_size | fixed
    k: int = 10
    token_policy: str = "oracle_tokens"  # oracle_tokens | cap_only
    token_cap: int = 2500
    top_k: int = 100
    mmr_lambda: float = 0.5
    eta: int = 3
    alpha: float = 0.5
    w: float = 0.5
    generate: bool = False
    seed: int = 0
    run_id: str = "run"

    def metric_config(self) -> MetricConfig:
        return MetricConfig(eta=self.eta, alpha=self.alpha, w=self.w)

    def snapshot(self) -> dict:
        return {
            "method": self.method,
            "reranker": self.reranker,
            "k_policy": self.k_policy,
            "k": self.k,
            "token_policy": self.token_policy,
            "token_budget": self.token_cap,
            "top_k": self.top_k,
            "mmr_lambda": self.mmr_lambda,
            "eta": self.eta,
            "alpha": self.alpha,
            "w": self.w,
            "generate": self.generate,
            "seed": self.seed,
        }


def _oracle_stats(topic: Topic, dataset: Dataset) -> tuple[list[str], int]:
    required = list(topic.required_subset_ids)
    tokens = sum(dataset.corpus[pid].token_count for pid in required)
    return required, tokens


def _budget_for(topic: Topic, dataset: Dataset, config: PipelineConfig) -> Budget:
    required, oracle_tokens = _oracle_stats(topic, dataset)
    if config.k_policy == "oracle_size":
        max_passages = len(required)
    elif config.k_policy == "fixed":
        max_passages = config.k
    else:
        raise ConfigError(f"unknown k_policy {config.k_policy!r}")
    if config.token_policy == "oracle_tokens":
        max_tokens = oracle_tokens
    elif config.token_policy == "cap_only":
        max_tokens = None
    else:
        raise ConfigError(f"unknown token_policy {config.token_policy!r}")
    return Budget(max_passages=max_passages, max_tokens=max_tokens, hard_token_cap=config.token_cap)


def _generate_result(
    gateway: LlmGateway,
    query: str,
    context_texts: Sequence[str],
    max_tokens: int,
    tokenizer: Tokenizer,
) -> str:
    text = gateway.generate(
        "report_gen", {"query": query, "context": "\n\n".join(context_texts)}
    )
    tokens = tokenizer(text)
    if len(tokens) > max_tokens:
        text = " ".join(tokens[:max_tokens])
    return text


def _judge_text_coverage(
    text: str,
    topic: Topic,
    judge: Judge,
    cache: JudgmentCache,
    eta: int,
) -> float:
    bits = []
    for q in topic.questions:
        if q.answerable:
            bits.append(cache.get_or_rate(q.text, text, judge) >= eta)
    return metrics.coverage(bits)


def run_pipeline(
    dataset: Dataset,
    config: PipelineConfig,
    judge: Judge,
    gateway: Optional[LlmGateway] = None,
    embedder: Optional[EmbeddingProvider] = None,
    tokenizer: Tokenizer = whitespace_tokenize,
    cache: Optional[JudgmentCache] = None,
) -> MetricReport:
    """Evaluate one retrieval pipeline across all topics of the dataset."""
    needs_embeddings = config.method == "dense" or config.reranker == "mmr"
    if needs_embeddings and embedder is None:
        raise ConfigError(f"method={config.method!r} reranker={config.reranker!r} needs an embedder")
    if config.generate and gateway is None:
        raise ConfigError("generation enabled but no gateway configured")

    passages = sorted(dataset.corpus.values(), key=lambda p: p.passage_id)
    index = build_index(passages) if config.method == "bm25" else None
    embeddings: Optional[CorpusEmbeddings] = (
        embed_corpus(embedder, passages) if needs_embeddings else None
    )
    vectors = (
        dict(zip(embeddings.passage_ids, embeddings.matrix)) if embeddings is not None else {}
    )
    cache = cache if cache is not None else JudgmentCache()

    per_topic: dict[str, dict[str, float]] = {}
    for topic in dataset.topics:
        answerable_idx = topic.answerable_idx
        if not answerable_idx:
            continue  # undefined-metric topic, excluded from aggregates
        matrix = dataset.matrix(topic.topic_id)

        if config.method == "bm25":
            candidates = bm25_search(index, topic.query, config.top_k, topic_id=topic.topic_id)
        elif config.method == "dense":
            candidates = dense_search(
                embedder, embeddings, topic.query, config.top_k, topic_id=topic.topic_id
            )
        else:
            raise ConfigError(f"unknown retrieval method {config.method!r}")

        if config.reranker == "mmr":
            candidates = mmr_rerank(candidates, vectors, config.mmr_lambda)
        elif config.reranker is not None and config.reranker != "none":
            raise ConfigError(f"unknown reranker {config.reranker!r}")

        budget = _budget_for(topic, dataset, config)
        context = assemble_context(
            candidates, {pid: dataset.corpus[pid].token_count for pid, _ in candidates.candidates}, budget
        )
        per_topic[topic.topic_id] = _score_context(
            topic, matrix, dataset, context, candidates, budget, config, judge, cache,
            gateway=gateway, tokenizer=tokenizer,
        )

    return MetricReport.from_per_topic(config.run_id, per_topic, config.snapshot())


def _score_context(
    topic: Topic,
    matrix: RatingMatrix,
    dataset: Dataset,
    context: RetrievalContext,
    candidates: RankedList,
    budget: Budget,
    config: PipelineConfig,
    judge: Judge,
    cache: JudgmentCache,
    gateway: Optional[LlmGateway] = None,
    tokenizer: Tokenizer = whitespace_tokenize,
) -> dict[str, float]:
    answerable_idx = topic.answerable_idx
    questions = [q.text for q in topic.questions]
    lookup = CachedRatingLookup(matrix, questions, dataset.corpus, judge, cache)
    oracle_lookup = MatrixLookup(matrix)

    required, oracle_tokens = _oracle_stats(topic, dataset)
    bits_star = metrics.answerability_of_context(
        oracle_lookup, answerable_idx, required, config.eta
    )
    cov_star = metrics.coverage(bits_star)
    # Forced by construction of the required subset; an empirical pipeline can
    # never out-cover this reference.
    assert cov_star == 1.0, f"oracle context of {topic.topic_id!r} does not cover all questions"

    row: dict[str, float] = {}
    bits = metrics.answerability_of_context(
        lookup, answerable_idx, context.passage_ids, config.eta
    )
    row["cov_z"] = metrics.coverage(bits)

    ideal = metrics.greedy_ideal_order(
        required, oracle_lookup, answerable_idx, config.eta, config.alpha
    )
    row["alpha_ndcg"] = metrics.alpha_ndcg(
        context.passage_ids, lookup, answerable_idx, ideal, config.eta, config.alpha
    )
    if context.total_tokens > 0:
        row["den_z"] = metrics.density(
            row["cov_z"], context.total_tokens, cov_star, oracle_tokens, config.w
        )
    cutoff = budget.max_passages or len(context.entries) or 1
    row.update(
        metrics.relevance_metrics(
            candidates.passage_ids, set(topic.oracle_passage_ids), cutoff
        )
    )

    if config.generate and gateway is not None:
        token_budget = oracle_tokens if config.token_policy == "oracle_tokens" else config.token_cap
        result = _generate_result(
            gateway,
            topic.query,
            [dataset.corpus[pid].text for pid in context.passage_ids],
            token_budget,
            tokenizer,
        )
        if result.strip():
            row["cov_y"] = _judge_text_coverage(result, topic, judge, cache, config.eta)
            result_tokens = len(tokenizer(result))
            if result_tokens > 0:
                row["den_y"] = metrics.density(
                    row["cov_y"], result_tokens, cov_star, oracle_tokens, config.w
                )
    return row


def run_reference_bounds(
    dataset: Dataset,
    judge: Judge,
    gateway: Optional[LlmGateway] = None,
    config: Optional[PipelineConfig] = None,
    generate: bool = False,
    tokenizer: Tokenizer = whitespace_tokenize,
    cache: Optional[JudgmentCache] = None,
) -> list[MetricReport]:
    """The three reference rows: direct prompting, oracle result, oracle
    retrieval. Generation-dependent cells are absent when generation is off."""
    config = config or PipelineConfig()
    if generate and gateway is None:
        raise ConfigError("generation enabled but no gateway configured")
    cache = cache if cache is not None else JudgmentCache()

    direct: dict[str, dict[str, float]] = {}
    oracle_result: dict[str, dict[str, float]] = {}
    oracle_retrieval: dict[str, dict[str, float]] = {}

    for topic in dataset.topics:
        if not topic.answerable_idx:
            continue
        matrix = dataset.matrix(topic.topic_id)
        oracle_lookup = MatrixLookup(matrix)
        answerable_idx = topic.answerable_idx
        required, oracle_tokens = _oracle_stats(topic, dataset)

        # (#1) direct prompting: no retrieval context at all.
        if generate:
            result = _generate_result(gateway, topic.query, [], oracle_tokens, tokenizer)
            if result.strip():
                direct[topic.topic_id] = {
                    "cov_y": _judge_text_coverage(result, topic, judge, cache, config.eta)
                }

        # (#2) the human-written summary as the final result.
        cov_y = _judge_text_coverage(topic.summary, topic, judge, cache, config.eta)
        row2 = {"cov_y": cov_y}
        summary_tokens = len(tokenizer(topic.summary))
        if summary_tokens > 0:
            row2["den_y"] = metrics.density(cov_y, summary_tokens, 1.0, oracle_tokens, config.w)
        oracle_result[topic.topic_id] = row2

        # (#3) oracle retrieval: the required subset in greedy-ideal order.
        ideal = metrics.greedy_ideal_order(
            required, oracle_lookup, answerable_idx, config.eta, config.alpha
        )
        context = RetrievalContext(
            topic.topic_id,
            tuple((pid, float(len(ideal) - i)) for i, pid in enumerate(ideal)),
            oracle_tokens,
        )
        bits = metrics.answerability_of_context(
            oracle_lookup, answerable_idx, context.passage_ids, config.eta
        )
        row3 = {
            "cov_z": metrics.coverage(bits),
            "alpha_ndcg": metrics.alpha_ndcg(
                context.passage_ids, oracle_lookup, answerable_idx, ideal, config.eta, config.alpha
            ),
            "den_z": metrics.density(
                metrics.coverage(bits), context.total_tokens, 1.0, oracle_tokens, config.w
            ),
        }
        assert row3["cov_z"] == 1.0
        if generate:
            result = _generate_result(
                gateway,
                topic.query,
                [dataset.corpus[pid].text for pid in context.passage_ids],
                oracle_tokens,
                tokenizer,
            )
            if result.strip():
                row3["cov_y"] = _judge_text_coverage(result, topic, judge, cache, config.eta)
                result_tokens = len(tokenizer(result))
                if result_tokens > 0:
                    row3["den_y"] = metrics.density(
                        row3["cov_y"], result_tokens, 1.0, oracle_tokens, config.w
                    )
        oracle_retrieval[topic.topic_id] = row3

    snapshot = config.snapshot()
    reports = []
    if direct:
        reports.append(MetricReport.from_per_topic("ref1-direct", direct, snapshot))
    reports.append(MetricReport.from_per_topic("ref2-oracle-result", oracle_result, snapshot))
    reports.append(MetricReport.from_per_topic("ref3-oracle-retrieval", oracle_retrieval, snapshot))
    return reports


DEFAULT_INTERMEDIATE_FIELDS = ("cov_z", "alpha_ndcg", "den_z", "recall", "map", "ndcg")


def correlate_runs(
    reports: Sequence[MetricReport],
    target_field: str = "cov_y",
    intermediate_fields: Sequence[str] = DEFAULT_INTERMEDIATE_FIELDS,
) -> dict:
    """Rank correlation between each intermediate metric and the target metric
    across runs (one observation per run, using aggregates)."""
    from .stats import kendall_tau, spearman_rho

    if len(reports) < 2:
        raise ConfigError("need at least 2 reports to correlate")
    usable = [r for r in reports if target_field in r.aggregates]
    if len(usable) < 2:
        raise ConfigError(f"fewer than 2 reports carry the target field {target_field!r}")

    target = [r.aggregates[target_field] for r in usable]
    table: dict[str, dict[str, float]] = {}
    for name in intermediate_fields:
        if not all(name in r.aggregates for r in usable):
            continue
        values = [r.aggregates[name] for r in usable]
        try:
            table[name] = {
                "kendall_tau": kendall_tau(values, target),
                "spearman_rho": spearman_rho(values, target),
            }
        except UndefinedMetricError:
            continue
    result = {
        "target": target_field,
        "n_runs": len(usable),
        "runs": [r.run_id for r in usable],
        "correlations": table,
    }
    if len(usable) < 3:
        result["warning"] = "correlation over fewer than 3 runs is unstable"
    return result


def sample_contexts(
    run: Mapping[str, RankedList],
    corpus: Mapping[str, Passage],
    n_contexts: int,
    context_size: int,
    pool_depth: int,
    seed: int,
) -> list[RetrievalContext]:
    """Seeded sampling of fixed-size contexts from the top of each ranking,
    cycling over the run's topics; used for metric-alignment studies."""
    if context_size > pool_depth:
        raise ConfigError(f"context_size {context_size} > pool_depth {pool_depth}")
    topic_ids = sorted(run)
    if not topic_ids:
        raise ConfigError("empty run")
    for topic_id in topic_ids:
        if len(run[topic_id].candidates) < pool_depth:
            raise ConfigError(
                f"run depth {len(run[topic_id].candidates)} of topic {topic_id!r} "
                f"< pool_depth {pool_depth}"
            )
    rng = random.Random(seed)
    contexts = []
    for i in range(n_contexts):
        topic_id = topic_ids[i % len(topic_ids)]
        pool = list(run[topic_id].candidates[:pool_depth])
        sampled = rng.sample(pool, context_size)
        total = sum(corpus[pid].token_count for pid, _ in sampled)
        contexts.append(RetrievalContext(topic_id, tuple(sampled), total))
    return contexts


def render_table(
    reports: Sequence[MetricReport],
    fields: Sequence[str] = ("cov_z", "alpha_ndcg", "cov_y", "den_z", "den_y"),
) -> str:
    """Aligned plain-text table of aggregate values, rendered x100."""
    header = ["run_id"] + list(fields)
    rows = [header]
    for report in reports:
        row = [report.run_id]
        for name in fields:
            value = report.aggregates.get(name)
            row.append("-" if value is None else f"{100.0 * value:.1f}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    return "\n".join(lines)
