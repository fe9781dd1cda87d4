"""Token counting.

All budgets and statistics are computed under an injected tokenizer so the
choice of model tokenizer stays configuration. The reference tokenizer splits
on Unicode whitespace; it is the default everywhere and the only one used in
tests.
"""

from __future__ import annotations

from typing import Callable, List

Tokenizer = Callable[[str], List[str]]


def whitespace_tokenize(text: str) -> list[str]:
    """Split on runs of Unicode whitespace."""
    return text.split()


def count_tokens(text: str, tokenizer: Tokenizer = whitespace_tokenize) -> int:
    return len(tokenizer(text))
