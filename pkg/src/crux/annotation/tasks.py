"""Annotation task bundles built from a dataset and generated results.

T1 tasks pair a generated report with the topic's answerable sub-questions for
binary coverage judgment with span highlighting. T2 tasks pair one oracle
passage with two randomly chosen sub-questions for rubric-graded rating; the
pre-judged matrix ratings serve as the model side of the alignment statistics.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass

from ..errors import SchemaError
from ..harness import Dataset

RUBRIC_VERSION = "0-5-graded-v1"


def text_sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class T1Task:
    task_id: str
    topic_id: str
    report_text: str
    questions: tuple[tuple[int, str], ...]  # (question_idx, text)
    context_source: str  # hidden from the annotator payload

    def payload(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": "t1",
            "topic_id": self.topic_id,
            "report_text": self.report_text,
            "report_sha256": text_sha(self.report_text),
            "questions": [{"idx": i, "text": t} for i, t in self.questions],
        }


@dataclass(frozen=True)
class T2Task:
    task_id: str
    topic_id: str
    passage_id: str
    passage_text: str
    questions: tuple[tuple[int, str], ...]

    def payload(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": "t2",
            "topic_id": self.topic_id,
            "passage_text": self.passage_text,
            "passage_sha256": text_sha(self.passage_text),
            "questions": [{"idx": i, "text": t} for i, t in self.questions],
            "rubric_version": RUBRIC_VERSION,
        }


@dataclass(frozen=True)
class ResultRecord:
    topic_id: str
    source: str  # retrieval context label, e.g. oracle / bm25 / reranked
    text: str


def load_results(path: str) -> list[ResultRecord]:
    results = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                results.append(ResultRecord(rec["topic_id"], rec["source"], rec["text"]))
            except (json.JSONDecodeError, KeyError) as exc:
                raise SchemaError(f"{path}:{lineno}: bad result record ({exc})") from exc
    return results


def build_tasks(
    dataset: Dataset,
    results: list[ResultRecord],
    seed: int = 0,
    questions_per_t2: int = 2,
) -> tuple[list[T1Task], list[T2Task], dict[tuple[str, int], int]]:
    """Returns (t1 tasks, t2 tasks, model ratings keyed by (t2 task, question))."""
    topics = {t.topic_id: t for t in dataset.topics}
    rng = random.Random(seed)

    t1_tasks = []
    for result in results:
        topic = topics[result.topic_id]
        questions = tuple(
            (q.question_idx, q.text) for q in topic.questions if q.answerable
        )
        t1_tasks.append(
            T1Task(
                task_id=f"t1-{result.topic_id}-{result.source}",
                topic_id=result.topic_id,
                report_text=result.text,
                questions=questions,
                context_source=result.source,
            )
        )

    t2_tasks = []
    model_ratings: dict[tuple[str, int], int] = {}
    for topic_id in sorted({r.topic_id for r in results}):
        topic = topics[topic_id]
        matrix = dataset.matrix(topic_id)
        passage_id = rng.choice(sorted(topic.oracle_passage_ids))
        all_questions = [(q.question_idx, q.text) for q in topic.questions]
        chosen = rng.sample(all_questions, min(questions_per_t2, len(all_questions)))
        task = T2Task(
            task_id=f"t2-{topic_id}",
            topic_id=topic_id,
            passage_id=passage_id,
            passage_text=dataset.corpus[passage_id].text,
            questions=tuple(chosen),
        )
        t2_tasks.append(task)
        for q_idx, _ in chosen:
            model_ratings[(task.task_id, q_idx)] = matrix.rating(q_idx, passage_id)
    return t1_tasks, t2_tasks, model_ratings
