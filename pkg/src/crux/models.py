"""Persistent data model and line-delimited file formats.

Every artifact (corpus, topics, rating matrices, reports) is stored as one
JSON object per line. All types are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import InvariantError, SchemaError
from .tokenization import Tokenizer, count_tokens, whitespace_tokenize

RATING_SCALE = (0, 1, 2, 3, 4, 5)


@dataclass(frozen=True)
class Passage:
    """A decontextualized retrieval unit."""

    passage_id: str
    source_doc_id: str
    text: str
    token_count: int

    def __post_init__(self) -> None:
        if not self.text:
            raise InvariantError(f"passage {self.passage_id!r}: empty text")
        if self.token_count < 0:
            raise InvariantError(f"passage {self.passage_id!r}: negative token_count")

    def to_record(self) -> dict:
        return {
            "passage_id": self.passage_id,
            "source_doc_id": self.source_doc_id,
            "text": self.text,
            "token_count": self.token_count,
        }


@dataclass(frozen=True)
class SubQuestion:
    question_idx: int
    text: str
    answerable: bool

    def to_record(self) -> dict:
        return {"idx": self.question_idx, "text": self.text, "answerable": self.answerable}


@dataclass(frozen=True)
class Topic:
    """One evaluation example: open-ended query, sub-questions and oracle scope.

    Question indices are preserved after filtering: filtered-out questions keep
    their original index and are marked ``answerable=False`` instead of being
    renumbered.
    """

    topic_id: str
    query: str
    summary: str
    questions: tuple[SubQuestion, ...]
    oracle_passage_ids: tuple[str, ...]
    required_subset_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.questions:
            raise InvariantError(f"topic {self.topic_id!r}: no questions")
        idxs = [q.question_idx for q in self.questions]
        if idxs != list(range(len(idxs))):
            raise InvariantError(
                f"topic {self.topic_id!r}: question indices not contiguous from 0"
            )
        oracle = set(self.oracle_passage_ids)
        if len(oracle) != len(self.oracle_passage_ids):
            raise InvariantError(f"topic {self.topic_id!r}: duplicate oracle passage id")
        missing = [p for p in self.required_subset_ids if p not in oracle]
        if missing:
            raise InvariantError(
                f"topic {self.topic_id!r}: required subset ids {missing} not in oracle set"
            )

    @property
    def answerable_idx(self) -> tuple[int, ...]:
        return tuple(q.question_idx for q in self.questions if q.answerable)

    def to_record(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "query": self.query,
            "summary": self.summary,
            "questions": [q.to_record() for q in self.questions],
            "oracle_passage_ids": list(self.oracle_passage_ids),
            "required_subset_ids": list(self.required_subset_ids),
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "Topic":
        questions = tuple(
            SubQuestion(q["idx"], q["text"], bool(q["answerable"])) for q in rec["questions"]
        )
        return cls(
            topic_id=rec["topic_id"],
            query=rec["query"],
            summary=rec["summary"],
            questions=questions,
            oracle_passage_ids=tuple(rec["oracle_passage_ids"]),
            required_subset_ids=tuple(rec["required_subset_ids"]),
        )


@dataclass(frozen=True)
class RatingMatrix:
    """Graded answerability ratings for every (question, oracle passage) pair.

    Rows follow the topic's question order; columns follow ``passage_ids``.
    """

    topic_id: str
    passage_ids: tuple[str, ...]
    ratings: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(set(self.passage_ids)) != len(self.passage_ids):
            raise InvariantError(f"matrix {self.topic_id!r}: duplicate passage id")
        for row in self.ratings:
            if len(row) != len(self.passage_ids):
                raise InvariantError(
                    f"matrix {self.topic_id!r}: row width {len(row)} != "
                    f"{len(self.passage_ids)} passages"
                )
            for r in row:
                if r not in RATING_SCALE:
                    raise InvariantError(f"matrix {self.topic_id!r}: rating {r!r} out of scale")

    @property
    def n_questions(self) -> int:
        return len(self.ratings)

    def column(self, passage_id: str) -> tuple[int, ...]:
        j = self.passage_ids.index(passage_id)
        return tuple(row[j] for row in self.ratings)

    def rating(self, question_idx: int, passage_id: str) -> int:
        return self.ratings[question_idx][self.passage_ids.index(passage_id)]

    def to_record(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "passage_ids": list(self.passage_ids),
            "ratings": [list(row) for row in self.ratings],
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "RatingMatrix":
        return cls(
            topic_id=rec["topic_id"],
            passage_ids=tuple(rec["passage_ids"]),
            ratings=tuple(tuple(int(r) for r in row) for row in rec["ratings"]),
        )


@dataclass(frozen=True)
class RetrievalContext:
    """An ordered, budgeted list of passages for one topic."""

    topic_id: str
    entries: tuple[tuple[str, float], ...]
    total_tokens: int

    def __post_init__(self) -> None:
        ids = [pid for pid, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise InvariantError(f"context {self.topic_id!r}: duplicate passage id")
        if self.total_tokens < 0:
            raise InvariantError(f"context {self.topic_id!r}: negative total_tokens")

    @property
    def passage_ids(self) -> tuple[str, ...]:
        return tuple(pid for pid, _ in self.entries)

    def to_record(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "entries": [[pid, score] for pid, score in self.entries],
            "total_tokens": self.total_tokens,
        }

    @classmethod
    def from_record(cls, rec: Mapping) -> "RetrievalContext":
        return cls(
            topic_id=rec["topic_id"],
            entries=tuple((pid, float(score)) for pid, score in rec["entries"]),
            total_tokens=int(rec["total_tokens"]),
        )


@dataclass(frozen=True)
class MetricReport:
    """Per-topic and aggregate metric values for one run.

    Aggregates are arithmetic means over topics where the field is present;
    absent fields mean "not computable for this topic" and are skipped, never
    zeroed.
    """

    run_id: str
    per_topic: Mapping[str, Mapping[str, float]]
    aggregates: Mapping[str, float]
    config: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, value in self.aggregates.items():
            values = [
                row[name] for row in self.per_topic.values() if name in row
            ]
            if not values:
                raise InvariantError(f"report {self.run_id!r}: aggregate {name!r} has no data")
            mean = sum(values) / len(values)
            if not math.isclose(mean, value, rel_tol=0.0, abs_tol=1e-9):
                raise InvariantError(
                    f"report {self.run_id!r}: aggregate {name!r}={value} != mean {mean}"
                )

    @classmethod
    def from_per_topic(
        cls,
        run_id: str,
        per_topic: Mapping[str, Mapping[str, float]],
        config: Optional[Mapping[str, object]] = None,
    ) -> "MetricReport":
        names: set[str] = set()
        for row in per_topic.values():
            names.update(row)
        aggregates = {}
        for name in sorted(names):
            values = [row[name] for row in per_topic.values() if name in row]
            if values:
                aggregates[name] = sum(values) / len(values)
        return cls(run_id, dict(per_topic), aggregates, dict(config or {}))


# ---------------------------------------------------------------------------
# Line-delimited file IO


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _iter_records(path: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: malformed JSON ({exc})") from exc


def load_corpus(path: str, tokenizer: Tokenizer = whitespace_tokenize) -> dict[str, Passage]:
    """Load a passage corpus, recomputing missing token counts."""
    corpus: dict[str, Passage] = {}
    for lineno, rec in _iter_records(path):
        try:
            pid = rec["passage_id"]
            text = rec["text"]
            token_count = rec.get("token_count")
            if token_count is None:
                token_count = count_tokens(text, tokenizer)
            passage = Passage(pid, rec["source_doc_id"], text, int(token_count))
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"{path}:{lineno}: bad corpus record ({exc})") from exc
        if passage.passage_id in corpus:
            raise InvariantError(f"{path}:{lineno}: duplicate passage_id {pid!r}")
        corpus[passage.passage_id] = passage
    return corpus


def save_corpus(corpus: Iterable[Passage], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for passage in corpus:
            fh.write(_dump_line(passage.to_record()) + "\n")


def save_topics(topics: Iterable[Topic], path: str) -> None:
    lines = [_dump_line(t.to_record()) for t in topics]  # validates before writing
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


def load_topics(path: str) -> list[Topic]:
    topics = []
    for lineno, rec in _iter_records(path):
        try:
            topics.append(Topic.from_record(rec))
        except KeyError as exc:
            raise SchemaError(f"{path}:{lineno}: bad topic record ({exc})") from exc
    return topics


def save_matrices(matrices: Iterable[RatingMatrix], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for matrix in matrices:
            fh.write(_dump_line(matrix.to_record()) + "\n")


def load_matrices(path: str) -> dict[str, RatingMatrix]:
    out: dict[str, RatingMatrix] = {}
    for lineno, rec in _iter_records(path):
        try:
            matrix = RatingMatrix.from_record(rec)
        except KeyError as exc:
            raise SchemaError(f"{path}:{lineno}: bad matrix record ({exc})") from exc
        out[matrix.topic_id] = matrix
    return out


def save_contexts(contexts: Iterable[RetrievalContext], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ctx in contexts:
            fh.write(_dump_line(ctx.to_record()) + "\n")


def load_contexts(path: str) -> list[RetrievalContext]:
    return [RetrievalContext.from_record(rec) for _, rec in _iter_records(path)]


AGGREGATE_KEY = "__aggregate__"


def save_report(report: MetricReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic_id in sorted(report.per_topic):
            rec = {"run_id": report.run_id, "topic_id": topic_id}
            rec.update(report.per_topic[topic_id])
            fh.write(_dump_line(rec) + "\n")
        agg = {"run_id": report.run_id, "topic_id": AGGREGATE_KEY, "config": dict(report.config)}
        agg.update(report.aggregates)
        fh.write(_dump_line(agg) + "\n")


def load_report(path: str) -> MetricReport:
    run_id = None
    per_topic: dict[str, dict[str, float]] = {}
    config: dict[str, object] = {}
    for lineno, rec in _iter_records(path):
        try:
            run_id = rec.pop("run_id")
            topic_id = rec.pop("topic_id")
        except KeyError as exc:
            raise SchemaError(f"{path}:{lineno}: bad report record ({exc})") from exc
        if topic_id == AGGREGATE_KEY:
            config = rec.pop("config", {})
        else:
            per_topic[topic_id] = {k: float(v) for k, v in rec.items()}
    if run_id is None:
        raise SchemaError(f"{path}: empty report")
    return MetricReport.from_per_topic(run_id, per_topic, config)


def validate_topic_against_matrix(topic: Topic, matrix: RatingMatrix, eta: int) -> None:
    """Check the answerability invariant linking a topic to its matrix."""
    if matrix.n_questions != len(topic.questions):
        raise InvariantError(
            f"topic {topic.topic_id!r}: matrix has {matrix.n_questions} rows "
            f"for {len(topic.questions)} questions"
        )
    if set(matrix.passage_ids) != set(topic.oracle_passage_ids):
        raise InvariantError(f"topic {topic.topic_id!r}: matrix passages != oracle set")
    for q in topic.questions:
        if q.answerable and max(matrix.ratings[q.question_idx], default=0) < eta:
            raise InvariantError(
                f"topic {topic.topic_id!r}: question {q.question_idx} marked answerable "
                f"but no oracle passage rates >= {eta}"
            )
