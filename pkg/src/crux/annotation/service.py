"""FastAPI service for the two human-evaluation tasks.

Annotators authenticate with static ids passed as the ``annotator`` query
parameter. Task payloads never expose the retrieval-context source label, to
avoid biasing judgments. Resubmission overwrites per (annotator, task,
question) with full history kept in the journal.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence

from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel, Field

from ..errors import UndefinedMetricError, UsageError
from ..stats import fleiss_kappa, pearson_r, spearman_rho, judge_vs_human
from .store import AnnotationStore
from .tasks import RUBRIC_VERSION, T1Task, T2Task


class T1JudgmentIn(BaseModel):
    question_idx: int = Field(ge=0)
    answerable: bool
    spans: list[tuple[int, int]] = Field(default_factory=list)


class T2JudgmentIn(BaseModel):
    question_idx: int = Field(ge=0)
    rating: int = Field(ge=0, le=5)


def normalize_spans(spans: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Sort and merge overlapping spans."""
    merged: list[tuple[int, int]] = []
    for start, end in sorted(spans):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def create_app(
    store: AnnotationStore,
    t1_tasks: Sequence[T1Task],
    t2_tasks: Sequence[T2Task],
    annotators: Sequence[str],
    model_coverage: Optional[Mapping[str, float]] = None,
    model_ratings: Optional[Mapping[tuple[str, int], int]] = None,
    eta: int = 3,
) -> FastAPI:
    app = FastAPI(title="crux-annotation")
    t1_by_id = {task.task_id: task for task in t1_tasks}
    t2_by_id = {task.task_id: task for task in t2_tasks}
    registered = set(annotators)
    model_coverage = dict(model_coverage or {})
    model_ratings = dict(model_ratings or {})

    def check_annotator(annotator: str) -> None:
        if annotator not in registered:
            raise HTTPException(status_code=401, detail=f"unknown annotator {annotator!r}")

    def t1_complete(task: T1Task, annotator: str) -> bool:
        answers = store.t1_answers(task.task_id, annotator)
        return all(idx in answers for idx, _ in task.questions)

    def t2_complete(task: T2Task, annotator: str) -> bool:
        ratings = store.t2_ratings(task.task_id, annotator)
        return all(idx in ratings for idx, _ in task.questions)

    @app.get("/tasks/next")
    def next_task(annotator: str = Query(...), kind: str = Query("t1")):
        check_annotator(annotator)
        if kind == "t1":
            pending = [t for t in t1_tasks if not t1_complete(t, annotator)]
        elif kind == "t2":
            pending = [t for t in t2_tasks if not t2_complete(t, annotator)]
        else:
            raise HTTPException(status_code=422, detail=f"unknown task kind {kind!r}")
        if not pending:
            raise HTTPException(status_code=404, detail="no tasks remain")
        return pending[0].payload()

    @app.post("/tasks/{task_id}/t1")
    def submit_t1(task_id: str, judgments: list[T1JudgmentIn], annotator: str = Query(...)):
        check_annotator(annotator)
        task = t1_by_id.get(task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id!r}")
        expected = {idx for idx, _ in task.questions}
        got = {j.question_idx for j in judgments}
        if got != expected or len(judgments) != len(expected):
            raise HTTPException(
                status_code=409,
                detail=f"expected one judgment per question {sorted(expected)}, got {sorted(got)}",
            )
        length = len(task.report_text)
        for judgment in judgments:
            spans = normalize_spans(judgment.spans)
            for start, end in spans:
                if not (0 <= start < end <= length):
                    raise HTTPException(
                        status_code=422,
                        detail=f"span ({start}, {end}) out of bounds for report of length {length}",
                    )
            if judgment.answerable and not spans:
                raise HTTPException(
                    status_code=422,
                    detail=f"question {judgment.question_idx}: answerable requires at least one span",
                )
            store.record_t1(task_id, annotator, judgment.question_idx, judgment.answerable, spans)
        return {"stored": len(judgments)}

    @app.post("/tasks/{task_id}/t2")
    def submit_t2(task_id: str, judgment: T2JudgmentIn, annotator: str = Query(...)):
        check_annotator(annotator)
        task = t2_by_id.get(task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id!r}")
        if judgment.question_idx not in {idx for idx, _ in task.questions}:
            raise HTTPException(
                status_code=409, detail=f"question {judgment.question_idx} not in task"
            )
        store.record_t2(task_id, annotator, judgment.question_idx, judgment.rating, RUBRIC_VERSION)
        return {"stored": 1}

    @app.get("/stats/human-coverage")
    def human_coverage():
        per_report: dict[str, dict[str, float]] = {}
        for task in t1_tasks:
            row: dict[str, float] = {}
            for annotator in sorted(registered):
                if t1_complete(task, annotator):
                    answers = store.t1_answers(task.task_id, annotator)
                    bits = [answers[idx] for idx, _ in task.questions]
                    row[annotator] = sum(bits) / len(bits) if bits else 0.0
            if row:
                per_report[task.task_id] = row
        body: dict = {
            "per_report": {
                task_id: {
                    "by_annotator": row,
                    "mean": sum(row.values()) / len(row),
                }
                for task_id, row in per_report.items()
            }
        }

        # Agreement over (task x question) items, restricted to annotators who
        # completed every report that anyone completed.
        complete_annotators = sorted(
            a for a in registered if all(t1_complete(t, a) for t in t1_tasks if t.task_id in per_report)
        )
        if len(complete_annotators) >= 2 and per_report:
            labels = []
            for task in t1_tasks:
                if task.task_id not in per_report:
                    continue
                for idx, _ in task.questions:
                    labels.append(
                        [store.t1_answers(task.task_id, a)[idx] for a in complete_annotators]
                    )
            try:
                body["fleiss_kappa"] = fleiss_kappa(labels, categories=[False, True])
            except UsageError:
                pass

        if model_coverage:
            alignment = {}
            for annotator in sorted(registered):
                pairs = [
                    (row[annotator], model_coverage[task_id])
                    for task_id, row in per_report.items()
                    if annotator in row and task_id in model_coverage
                ]
                if len(pairs) < 2:
                    continue
                human = [h for h, _ in pairs]
                llm = [m for _, m in pairs]
                entry = {}
                try:
                    entry["spearman_rho"] = spearman_rho(human, llm)
                    entry["pearson_r"] = pearson_r(human, llm)
                except (UsageError, UndefinedMetricError):
                    pass
                if entry:
                    alignment[annotator] = entry
            if alignment:
                body["model_alignment"] = alignment
        return body

    @app.get("/stats/judge-alignment")
    def judge_alignment():
        model_list: list[int] = []
        human_list: list[int] = []
        for (task_id, annotator, q_idx), rec in sorted(store.t2.items()):
            key = (task_id, q_idx)
            if key in model_ratings:
                model_list.append(model_ratings[key])
                human_list.append(rec["rating"])
        if not human_list:
            return {"pairs": 0}
        return {
            "pairs": len(human_list),
            "eta": eta,
            "classes": judge_vs_human(model_list, human_list, eta),
        }

    return app
