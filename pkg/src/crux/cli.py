"""Command-line interface.

Subcommands cover the full workflow: build a controlled dataset, index and
search the corpus, re-rank and assemble contexts, run evaluations and
reference bounds, correlate runs, sample study contexts, and serve the
annotation API.
"""

from __future__ import annotations

import json
import os
import sys

import click

from . import builder, harness
from .errors import CruxError
from .gateway.client import HttpChatBackend, LlmGateway
from .gateway.mock import FixtureJudge, MockModelBackend
from .models import load_corpus, save_contexts
from .retrieval import (
    Budget,
    HashingEmbedder,
    assemble_context,
    bm25_search,
    build_index,
    dense_search,
    embed_corpus,
    load_index,
    load_run,
    mmr_rerank,
    save_index,
    save_run,
)

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:
    import tomli as tomllib


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _make_gateway(endpoint: str | None) -> LlmGateway:
    if endpoint == "mock" or (endpoint is None and os.environ.get("CRUX_LLM_BASE_URL") is None):
        return LlmGateway(MockModelBackend(), backoff=0.0)
    backend = HttpChatBackend(base_url=None if endpoint in (None, "env") else endpoint)
    return LlmGateway(backend)


def _pipeline_config(cfg: dict, **overrides) -> harness.PipelineConfig:
    fields = {
        "method", "reranker", "k_policy", "k", "token_policy", "token_cap",
        "top_k", "mmr_lambda", "eta", "alpha", "w", "generate", "seed", "run_id",
    }
    kwargs = {k: v for k, v in cfg.items() if k in fields}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return harness.PipelineConfig(**kwargs)


@click.group()
def main() -> None:
    """Controlled evaluation of retrieval-augmented contexts."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--n-questions", default=builder.DEFAULT_N_QUESTIONS, show_default=True)
@click.option("--eta", default=builder.DEFAULT_ETA, show_default=True)
@click.option("--endpoint", default=None, help="LLM endpoint base URL, 'env', or 'mock'.")
@click.option("--mock-fixture", type=click.Path(exists=True), default=None,
              help="Judge from a fixture file of {question_key, context_key, rating} lines.")
def build(input_path, out_dir, n_questions, eta, endpoint, mock_fixture):
    """Build topics, corpus and rating matrices from summary examples."""
    gateway = _make_gateway(endpoint)
    if mock_fixture:
        fixture = {}
        with open(mock_fixture, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    fixture[(rec["question_key"], rec["context_key"])] = int(rec["rating"])
        judge = FixtureJudge(fixture)
    else:
        judge = gateway
    examples = builder.load_examples(input_path)
    config = builder.BuildConfig(n_questions=n_questions, eta=eta)
    build_result = builder.build_dataset(examples, gateway, judge, config)
    harness.save_dataset(
        harness.Dataset(build_result.topics, build_result.corpus, build_result.matrices),
        out_dir,
    )
    click.echo(f"built {len(build_result.topics)} topics, {len(build_result.corpus)} passages")
    for example_id, reason in build_result.skipped:
        click.echo(f"skipped {example_id}: {reason}", err=True)


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def index(corpus_path, out_path):
    """Build and persist the lexical inverted index."""
    corpus = load_corpus(corpus_path)
    idx = build_index(sorted(corpus.values(), key=lambda p: p.passage_id))
    save_index(idx, out_path)
    click.echo(f"indexed {idx.n_docs} passages, avgdl {idx.avgdl:.1f}")


@main.command()
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["bm25", "dense"]), default="bm25", show_default=True)
@click.option("--k", default=100, show_default=True)
@click.option("--index", "index_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def search(dataset_dir, method, k, index_path, out_path):
    """Retrieve top-k candidates for every topic query."""
    dataset = harness.load_dataset(dataset_dir)
    passages = sorted(dataset.corpus.values(), key=lambda p: p.passage_id)
    runs = {}
    if method == "bm25":
        idx = load_index(index_path) if index_path else build_index(passages)
        for topic in dataset.topics:
            runs[topic.topic_id] = bm25_search(idx, topic.query, k, topic_id=topic.topic_id)
    else:
        embedder = HashingEmbedder()
        embeddings = embed_corpus(embedder, passages)
        for topic in dataset.topics:
            runs[topic.topic_id] = dense_search(
                embedder, embeddings, topic.query, k, topic_id=topic.topic_id
            )
    save_run(runs, out_path, tag=method)
    click.echo(f"wrote {len(runs)} rankings to {out_path}")


@main.command()
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--method", type=click.Choice(["mmr"]), default="mmr", show_default=True)
@click.option("--lambda", "lam", default=0.5, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def rerank(run_path, dataset_dir, method, lam, out_path):
    """Diversity re-ranking of an existing run."""
    dataset = harness.load_dataset(dataset_dir)
    runs = load_run(run_path)
    embedder = HashingEmbedder()
    vectors = {pid: embedder.embed(p.text) for pid, p in dataset.corpus.items()}
    reranked = {tid: mmr_rerank(ranked, vectors, lam) for tid, ranked in runs.items()}
    save_run(reranked, out_path, tag=f"{method}-{lam}")
    click.echo(f"reranked {len(reranked)} rankings")


@main.command()
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--k-policy", type=click.Choice(["oracle", "fixed"]), default="oracle", show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--token-cap", default=2500, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def assemble(run_path, dataset_dir, k_policy, k, token_cap, out_path):
    """Assemble budgeted retrieval contexts from a run."""
    dataset = harness.load_dataset(dataset_dir)
    runs = load_run(run_path)
    topics = {t.topic_id: t for t in dataset.topics}
    contexts = []
    for topic_id in sorted(runs):
        topic = topics[topic_id]
        if k_policy == "oracle":
            required, oracle_tokens = harness._oracle_stats(topic, dataset)
            budget = Budget(len(required), oracle_tokens, token_cap)
        else:
            budget = Budget(k, None, token_cap)
        token_counts = {pid: dataset.corpus[pid].token_count for pid, _ in runs[topic_id].candidates}
        contexts.append(assemble_context(runs[topic_id], token_counts, budget))
    save_contexts(contexts, out_path)
    click.echo(f"assembled {len(contexts)} contexts")


@main.command(name="eval")
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--run-id", default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_cmd(dataset_dir, config_path, run_id, out_path):
    """Run one pipeline end-to-end and write its metric report."""
    cfg = _load_config(config_path)
    pipeline = _pipeline_config(cfg, run_id=run_id)
    gateway = _make_gateway(cfg.get("endpoint"))
    dataset = harness.load_dataset(dataset_dir)
    embedder = HashingEmbedder() if (pipeline.method == "dense" or pipeline.reranker == "mmr") else None
    report = harness.run_pipeline(dataset, pipeline, judge=gateway, gateway=gateway, embedder=embedder)
    from .models import save_report

    save_report(report, out_path)
    click.echo(harness.render_table([report]))


@main.command()
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--generate/--no-generate", default=False, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def bounds(dataset_dir, config_path, generate, out_dir):
    """Compute the three reference bounds."""
    cfg = _load_config(config_path)
    pipeline = _pipeline_config(cfg)
    gateway = _make_gateway(cfg.get("endpoint"))
    dataset = harness.load_dataset(dataset_dir)
    reports = harness.run_reference_bounds(
        dataset, judge=gateway, gateway=gateway, config=pipeline, generate=generate
    )
    from .models import save_report

    os.makedirs(out_dir, exist_ok=True)
    for report in reports:
        save_report(report, os.path.join(out_dir, f"{report.run_id}.jsonl"))
    click.echo(harness.render_table(reports))


@main.command()
@click.option("--reports", "report_paths", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--target", default="cov_y", show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def correlate(report_paths, target, out_path):
    """Rank correlation between intermediate metrics and a target metric."""
    from .models import load_report

    reports = [load_report(p) for p in report_paths]
    table = harness.correlate_runs(reports, target)
    text = json.dumps(table, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    click.echo(text)


@main.command(name="sample-contexts")
@click.option("--run", "run_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--n", default=16, show_default=True)
@click.option("--size", default=10, show_default=True)
@click.option("--pool", default=50, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def sample_contexts_cmd(run_path, dataset_dir, n, size, pool, seed, out_path):
    """Sample random fixed-size contexts for metric-alignment studies."""
    dataset = harness.load_dataset(dataset_dir)
    runs = load_run(run_path)
    contexts = harness.sample_contexts(runs, dataset.corpus, n, size, pool, seed)
    save_contexts(contexts, out_path)
    click.echo(f"sampled {len(contexts)} contexts")


@main.command()
@click.option("--dataset", "dataset_dir", required=True, type=click.Path(exists=True))
@click.option("--reports", "results_path", required=True, type=click.Path(exists=True),
              help="Generated results file: one {topic_id, source, text} object per line.")
@click.option("--annotators", default="a1,a2,a3", show_default=True)
@click.option("--journal", "journal_path", type=click.Path(), default=None)
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(dataset_dir, results_path, annotators, journal_path, port, host):
    """Serve the annotation API."""
    from .annotation import AnnotationStore, build_tasks, create_app, load_results

    dataset = harness.load_dataset(dataset_dir)
    results = load_results(results_path)
    t1_tasks, t2_tasks, model_ratings = build_tasks(dataset, results)
    store = AnnotationStore(journal_path)
    app = create_app(
        store, t1_tasks, t2_tasks, annotators.split(","), model_ratings=model_ratings
    )
    import uvicorn

    uvicorn.run(app, host=host, port=port)


def entrypoint() -> None:
    try:
        main(standalone_mode=True)
    except CruxError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    entrypoint()
