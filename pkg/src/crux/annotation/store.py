"""Append-only judgment journal with last-write-wins materialization.

Every write is appended to the journal (audit history); the materialized maps
always reflect the latest record per (task, annotator, question). Writes are
serialized through a lock; reads go against materialized state.
"""

from __future__ import annotations

import json
import threading
import time
from typing import Optional


class AnnotationStore:
    def __init__(self, journal_path: Optional[str] = None):
        self._journal_path = journal_path
        self._lock = threading.Lock()
        self.history: list[dict] = []
        # (task_id, annotator, question_idx) -> record
        self.t1: dict[tuple[str, str, int], dict] = {}
        self.t2: dict[tuple[str, str, int], dict] = {}
        if journal_path:
            self._replay(journal_path)

    def _replay(self, path: str) -> None:
        try:
            fh = open(path, encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                line = line.strip()
                if line:
                    self._apply(json.loads(line), persist=False)

    def _apply(self, record: dict, persist: bool = True) -> None:
        self.history.append(record)
        key = (record["task_id"], record["annotator"], record["question_idx"])
        if record["kind"] == "t1":
            self.t1[key] = record
        else:
            self.t2[key] = record
        if persist and self._journal_path:
            with open(self._journal_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")

    def record_t1(
        self,
        task_id: str,
        annotator: str,
        question_idx: int,
        answerable: bool,
        spans: list[tuple[int, int]],
    ) -> None:
        with self._lock:
            self._apply(
                {
                    "kind": "t1",
                    "task_id": task_id,
                    "annotator": annotator,
                    "question_idx": question_idx,
                    "answerable": answerable,
                    "spans": [list(span) for span in spans],
                    "ts": time.time(),
                }
            )

    def record_t2(
        self,
        task_id: str,
        annotator: str,
        question_idx: int,
        rating: int,
        rubric_version: str,
    ) -> None:
        with self._lock:
            self._apply(
                {
                    "kind": "t2",
                    "task_id": task_id,
                    "annotator": annotator,
                    "question_idx": question_idx,
                    "rating": rating,
                    "rubric_version": rubric_version,
                    "ts": time.time(),
                }
            )

    def t1_answers(self, task_id: str, annotator: str) -> dict[int, bool]:
        return {
            q: rec["answerable"]
            for (t, a, q), rec in self.t1.items()
            if t == task_id and a == annotator
        }

    def t2_ratings(self, task_id: str, annotator: str) -> dict[int, int]:
        return {
            q: rec["rating"]
            for (t, a, q), rec in self.t2.items()
            if t == task_id and a == annotator
        }
