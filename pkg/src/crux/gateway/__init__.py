"""Single boundary to text-generation and judging models."""

from .client import (
    JUDGE,
    TEXT,
    ChatBackend,
    GenParams,
    HttpChatBackend,
    Judge,
    LlmGateway,
    parse_rating,
)
from .mock import FixtureJudge, MockModelBackend, ScriptedBackend, content_key, mock_judge
from .prompts import PROMPT_TEMPLATES, PromptTemplate, render_prompt

__all__ = [
    "ChatBackend",
    "FixtureJudge",
    "GenParams",
    "HttpChatBackend",
    "JUDGE",
    "Judge",
    "LlmGateway",
    "MockModelBackend",
    "PROMPT_TEMPLATES",
    "PromptTemplate",
    "ScriptedBackend",
    "TEXT",
    "content_key",
    "mock_judge",
    "parse_rating",
    "render_prompt",
]
