import json

import pytest

from crux.builder import BuildConfig, build_dataset, load_examples
from crux.gateway.client import LlmGateway
from crux.gateway.mock import MockModelBackend
from crux.harness import Dataset
from crux.models import Passage, RatingMatrix, SubQuestion, Topic

WORDS = ["ridge", "basin", "comet", "glacier", "harbor", "meadow", "quarry", "delta"]

# One line per acceptance criterion, printed after the run (see test_acceptance).
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"  {line}")


def make_example_record(example_id: str, n_docs: int = 2, n_extra_sentences: int = 2) -> dict:
    """Synthetic (summary, documents) example with traceable vocabulary.

    Each document repeats one summary sentence, so questions derived from the
    summary are answerable by that document's passages under the overlap judge.
    """
    summary_sentences = []
    documents = []
    for d in range(n_docs):
        key = f"{example_id}x{d}"
        sentence = (
            f"Researchers at site {key}alpha recorded signal {key}beta "
            f"beside landmark {key}gamma during expedition {key}delta."
        )
        summary_sentences.append(sentence)
        filler = [
            f"Additional notes mention artifact {key}eps{j} and reading {key}zeta{j} "
            f"observed near outpost {key}theta{j}."
            for j in range(n_extra_sentences)
        ]
        documents.append(" ".join([sentence] + filler))
    return {
        "example_id": example_id,
        "summary": " ".join(summary_sentences),
        "documents": documents,
    }


def write_examples(path, n_examples: int = 3, n_docs: int = 2) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n_examples):
            fh.write(json.dumps(make_example_record(f"ex{i:02d}", n_docs)) + "\n")


@pytest.fixture
def mock_gateway() -> LlmGateway:
    return LlmGateway(MockModelBackend(), backoff=0.0)


@pytest.fixture
def mock_dataset(tmp_path, mock_gateway) -> Dataset:
    examples_path = tmp_path / "examples.jsonl"
    write_examples(examples_path, n_examples=3)
    examples = load_examples(str(examples_path))
    build = build_dataset(examples, mock_gateway, mock_gateway, BuildConfig(n_questions=6))
    assert not build.skipped
    return Dataset(build.topics, build.corpus, build.matrices)


def make_passage(pid: str, text: str = "one two three", source: str = "doc") -> Passage:
    return Passage(pid, source, text, len(text.split()))


@pytest.fixture
def tiny_topic() -> tuple[Topic, RatingMatrix, dict[str, Passage]]:
    """Hand-built 3-question x 3-passage topic with known structure.

    p0 answers q0 and q1; p1 answers q2; p2 answers nothing. q1 also rated 4 by
    p1. All three questions answerable at eta=3.
    """
    passages = {
        "p0": make_passage("p0", "alpha beta gamma delta epsilon"),
        "p1": make_passage("p1", "zeta eta theta"),
        "p2": make_passage("p2", "iota kappa"),
    }
    matrix = RatingMatrix(
        "t0",
        ("p0", "p1", "p2"),
        ((5, 0, 0), (4, 4, 0), (0, 5, 1)),
    )
    topic = Topic(
        topic_id="t0",
        query="report on the alpha project",
        summary="alpha beta gamma. zeta eta theta.",
        questions=(
            SubQuestion(0, "what is alpha?", True),
            SubQuestion(1, "what is beta?", True),
            SubQuestion(2, "what is zeta?", True),
        ),
        oracle_passage_ids=("p0", "p1", "p2"),
        required_subset_ids=("p0", "p1"),
    )
    return topic, matrix, passages
