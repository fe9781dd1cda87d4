"""Budgeted context assembly.

Candidates are taken in rank order while every budget holds. The first passage
that would breach the token budget stops assembly entirely: skipping ahead
would change the effective ranking and contaminate rank-sensitive metrics. A
hard 2500-token cap always applies on top of any configured token budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from ..models import RetrievalContext
from .index import RankedList

HARD_TOKEN_CAP = 2500


@dataclass(frozen=True)
class Budget:
    max_passages: Optional[int] = None
    max_tokens: Optional[int] = None
    hard_token_cap: int = HARD_TOKEN_CAP

    @property
    def token_limit(self) -> int:
        if self.max_tokens is None:
            return self.hard_token_cap
        return min(self.max_tokens, self.hard_token_cap)


def assemble_context(
    ranked: RankedList,
    token_counts: Mapping[str, int],
    budget: Budget,
) -> RetrievalContext:
    entries: list[tuple[str, float]] = []
    total = 0
    limit = budget.token_limit
    for pid, score in ranked.candidates:
        if budget.max_passages is not None and len(entries) >= budget.max_passages:
            break
        tokens = token_counts[pid]
        if total + tokens > limit:
            break
        entries.append((pid, score))
        total += tokens
    return RetrievalContext(ranked.topic_id, tuple(entries), total)
