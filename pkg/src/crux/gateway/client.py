"""Chat-style HTTP client with retry, plus the gateway facade used everywhere.

Endpoint configuration comes from ``CRUX_LLM_BASE_URL``, ``CRUX_LLM_API_KEY``
and ``CRUX_LLM_MODEL``. The wire format is a minimal chat completion: POST
``{model, messages, temperature, top_p, max_tokens}``; the reply text is read
from a configurable path into the response JSON.
"""

from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

import httpx

from ..errors import ConfigError, TransportError
from .prompts import render_prompt


@dataclass(frozen=True)
class GenParams:
    temperature: float
    top_p: float
    max_tokens: int
    seed: Optional[int] = None


# Text generation (queries, passages, questions) vs. deterministic judging.
TEXT = GenParams(temperature=0.7, top_p=0.95, max_tokens=1024)
JUDGE = GenParams(temperature=0.0, top_p=1.0, max_tokens=16)


class ChatBackend(Protocol):
    def complete(self, prompt: str, params: GenParams) -> str: ...


class Judge(Protocol):
    def rate(self, question: str, context: str) -> int: ...


_INT_TOKEN = re.compile(r"(?<![\d.])(\d+)(?![\d.])")


def parse_rating(reply: str) -> int:
    """First standalone integer in 0..5 wins; anything else is 0."""
    for match in _INT_TOKEN.finditer(reply):
        value = int(match.group(1))
        if 0 <= value <= 5:
            return value
    return 0


DEFAULT_TEXT_PATH: tuple = ("choices", 0, "message", "content")


class HttpChatBackend:
    """Minimal chat-completion client with a bounded in-flight cap."""

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        model: Optional[str] = None,
        *,
        text_path: Sequence = DEFAULT_TEXT_PATH,
        timeout: float = 60.0,
        max_in_flight: int = 8,
    ):
        self.base_url = base_url or os.environ.get("CRUX_LLM_BASE_URL")
        self.api_key = api_key or os.environ.get("CRUX_LLM_API_KEY")
        self.model = model or os.environ.get("CRUX_LLM_MODEL")
        if not self.base_url or not self.model:
            raise ConfigError(
                "LLM endpoint not configured: set CRUX_LLM_BASE_URL and CRUX_LLM_MODEL"
            )
        self.text_path = tuple(text_path)
        self._semaphore = threading.Semaphore(max_in_flight)
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self._client = httpx.Client(base_url=self.base_url, headers=headers, timeout=timeout)

    def complete(self, prompt: str, params: GenParams) -> str:
        payload: dict = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        with self._semaphore:
            try:
                response = self._client.post("/chat/completions", json=payload)
                response.raise_for_status()
            except httpx.HTTPError as exc:
                raise TransportError(f"chat endpoint failed: {exc}") from exc
        try:
            node = response.json()
            for key in self.text_path:
                node = node[key]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise TransportError(f"unexpected response shape: {exc}") from exc
        return str(node)


class LlmGateway:
    """Prompt rendering + dispatch + retry around a chat backend.

    Transient transport failures are retried up to ``max_retries`` times with
    exponential backoff. ``retry_count`` accumulates the number of retries
    performed over the gateway's lifetime.
    """

    def __init__(self, backend: ChatBackend, *, max_retries: int = 3, backoff: float = 0.5):
        self.backend = backend
        self.max_retries = max_retries
        self.backoff = backoff
        self.retry_count = 0

    def complete(self, prompt: str, params: GenParams) -> str:
        attempt = 0
        while True:
            try:
                return self.backend.complete(prompt, params)
            except TransportError:
                if attempt >= self.max_retries:
                    raise
                delay = self.backoff * (2**attempt)
                if delay > 0:
                    time.sleep(delay)
                attempt += 1
                self.retry_count += 1

    def generate(self, template_id: str, bindings: dict, params: GenParams = TEXT) -> str:
        return self.complete(render_prompt(template_id, bindings), params)

    def judge_rating(self, question: str, context: str) -> int:
        reply = self.generate("grading", {"question": question, "context": context}, JUDGE)
        return parse_rating(reply)

    # Judge protocol alias so the gateway can be passed wherever a judge is needed.
    def rate(self, question: str, context: str) -> int:
        return self.judge_rating(question, context)
