"""Deterministic offline stand-ins for the model endpoint.

``ScriptedBackend`` replays canned replies (or scripted failures) in order and
is meant for unit tests. ``MockModelBackend`` is a pure function of the prompt:
it recognizes the packaged templates, extracts their bound fields and
synthesizes plausible output, which makes end-to-end dataset builds and
evaluations fully reproducible without any endpoint.
"""

from __future__ import annotations

import hashlib
import re
from typing import Iterable, Mapping, Union

from ..errors import TransportError, UsageError
from .client import GenParams


def content_key(text: str) -> str:
    """Stable short hash of whitespace-normalized content."""
    normalized = " ".join(text.split())
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()[:16]


class ScriptedBackend:
    """Replays a fixed sequence of replies; exceptions in the script are raised."""

    def __init__(self, script: Iterable[Union[str, Exception]]):
        self._script = list(script)
        self.calls: list[str] = []

    def complete(self, prompt: str, params: GenParams) -> str:
        self.calls.append(prompt)
        if not self._script:
            raise UsageError("scripted backend exhausted")
        item = self._script.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


class FixtureJudge:
    """Deterministic judge backed by a fixture of pre-decided ratings.

    Keys are ``(content_key(question), content_key(context))``; unknown pairs
    rate 0.
    """

    def __init__(self, fixture: Mapping[tuple[str, str], int]):
        self._fixture = dict(fixture)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str, int]]) -> "FixtureJudge":
        return cls({(content_key(q), content_key(c)): r for q, c, r in pairs})

    def rate(self, question: str, context: str) -> int:
        return self._fixture.get((content_key(question), content_key(context)), 0)


def mock_judge(fixture: Mapping[tuple[str, str], int]) -> FixtureJudge:
    return FixtureJudge(fixture)


_STOP = frozenset(
    "a an and are as at be but by for from has have in is it its of on or that the "
    "this to was were what when where which who will with does do did how why say "
    "about text".split()
)


def _content_words(text: str) -> set[str]:
    return {w for w in re.findall(r"[\w$]+", text.lower()) if w not in _STOP}


def overlap_rating(question: str, context: str) -> int:
    """Graded rating from lexical overlap; deterministic judge heuristic."""
    q_words = _content_words(question)
    if not q_words:
        return 0
    fraction = len(q_words & _content_words(context)) / len(q_words)
    if fraction >= 0.9:
        return 5
    if fraction >= 0.7:
        return 4
    if fraction >= 0.5:
        return 3
    if fraction >= 0.3:
        return 2
    if fraction > 0.1:
        return 1
    return 0


_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")


def _between(prompt: str, start: str, end: str, last: bool = False) -> str:
    idx = prompt.rfind(start) if last else prompt.find(start)
    if idx < 0:
        raise UsageError(f"mock backend: marker {start!r} not found")
    chunk = prompt[idx + len(start):]
    stop = chunk.find(end)
    return chunk[:stop] if stop >= 0 else chunk


class MockModelBackend:
    """Pure-function chat backend recognizing the packaged prompt templates."""

    def __init__(self, *, fail_first: int = 0):
        # fail_first: raise a transport error on the first N calls (retry tests).
        self._failures_left = fail_first
        self.calls = 0

    def complete(self, prompt: str, params: GenParams) -> str:
        self.calls += 1
        if self._failures_left > 0:
            self._failures_left -= 1
            raise TransportError("mock transport failure")
        if "Rate the context with on a scale from 0 to 5" in prompt:
            return self._grade(prompt)
        if "Write the question within '<q>'" in prompt:
            return self._questions(prompt)
        if "Write each passages within '<p>'" in prompt:
            return self._passages(prompt)
        if "Create a statement of report request" in prompt:
            return self._query(prompt)
        if "Write a comprehensive report" in prompt:
            return self._report(prompt)
        raise UsageError("mock backend: unrecognized prompt")

    def _grade(self, prompt: str) -> str:
        question = _between(prompt, "Question: ", "\nContext:").strip()
        context = _between(prompt, "\nContext: ", "\nRating:").strip()
        return str(overlap_rating(question, context))

    def _questions(self, prompt: str) -> str:
        n = int(_between(prompt, "Instruction: Write ", " diverse"))
        document = _between(prompt, "Document: ", "\nQuestions:").strip()
        sentences = [s for s in _SENT_SPLIT.split(document) if s.strip()]
        spans = []
        for sentence in sentences[:n]:
            words = sorted(_content_words(sentence))[:5]
            if not words:
                continue
            spans.append(f"<q>What does the text say about {' '.join(words)}?</q>")
        if not spans:
            spans.append("<q>What does the text say about the main subject?</q>")
        return "\n".join(spans)

    def _passages(self, prompt: str) -> str:
        document = _between(prompt, "Document: ", "\nPassages:").strip()
        words = document.split()
        n_chunks = 3 if len(words) > 260 else 2
        size = max(1, -(-len(words) // n_chunks))
        chunks = [" ".join(words[i:i + size]) for i in range(0, len(words), size)]
        return "\n".join(f"<p>{chunk}</p>" for chunk in chunks if chunk)

    def _query(self, prompt: str) -> str:
        report = _between(prompt, "Report: ", "\n\nReport request:", last=True).strip()
        head = " ".join(report.split()[:12])
        return f"Write a detailed report covering the following: {head}.</r>"

    def _report(self, prompt: str) -> str:
        context = _between(prompt, "Context:\n", "\nReport:").strip()
        body = " ".join(context.split()[:150])
        return f"This report addresses the request. {body}"
