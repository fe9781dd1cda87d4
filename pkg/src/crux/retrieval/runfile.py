"""Whitespace-delimited run files: ``topic_id passage_id rank score tag``.

Rank is 1-based; the layout is compatible with classical IR evaluation tools.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from ..errors import SchemaError
from .index import RankedList


def save_run(runs: Mapping[str, RankedList], path: str, tag: str = "crux") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic_id in sorted(runs):
            for rank, (pid, score) in enumerate(runs[topic_id].candidates, start=1):
                fh.write(f"{topic_id} {pid} {rank} {score:.6f} {tag}\n")


def load_run(path: str) -> dict[str, RankedList]:
    rows: dict[str, list[tuple[int, str, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise SchemaError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            topic_id, pid, rank, score, _tag = parts
            try:
                rows.setdefault(topic_id, []).append((int(rank), pid, float(score)))
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: bad rank or score ({exc})") from exc
    return {
        topic_id: RankedList(
            topic_id,
            tuple((pid, score) for _, pid, score in sorted(entries)),
        )
        for topic_id, entries in rows.items()
    }
