"""Controlled dataset construction from (summary, documents) examples.

Per example: synthesize an open-ended query and diverse sub-questions from the
summary, decontextualize every document into standalone passages, judge all
(question, passage) pairs into a rating matrix, filter unanswerable questions,
and greedily select the required passage subset that collectively answers every
surviving question. Passages from all other examples act as distractors in the
shared corpus.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import BuildError, SchemaError, TransportError
from .gateway.client import Judge, LlmGateway
from .models import Passage, RatingMatrix, SubQuestion, Topic
from .tokenization import Tokenizer, whitespace_tokenize

logger = logging.getLogger(__name__)

DEFAULT_N_QUESTIONS = 15
DEFAULT_ETA = 3
MAX_SEGMENT_TOKENS = 1024


@dataclass(frozen=True)
class RawExample:
    example_id: str
    summary: str
    documents: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.summary:
            raise SchemaError(f"example {self.example_id!r}: empty summary")
        if not self.documents:
            raise SchemaError(f"example {self.example_id!r}: no documents")


def load_examples(path: str) -> list[RawExample]:
    examples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                examples.append(
                    RawExample(rec["example_id"], rec["summary"], tuple(rec["documents"]))
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise SchemaError(f"{path}:{lineno}: bad example record ({exc})") from exc
    return examples


# ---------------------------------------------------------------------------
# Tagged-span extraction

def extract_tagged(reply: str, tag: str) -> list[str]:
    """All ``<tag>...</tag>`` spans, tolerating a missing leading open tag.

    The generation prompts prime the model with an opening tag, so replies
    frequently start mid-span.
    """
    open_tag, close_tag = f"<{tag}>", f"</{tag}>"
    first_open = reply.find(open_tag)
    first_close = reply.find(close_tag)
    if first_close >= 0 and (first_open < 0 or first_close < first_open):
        reply = open_tag + reply
    pattern = re.compile(re.escape(open_tag) + r"(.*?)" + re.escape(close_tag), re.S)
    return [m.group(1).strip() for m in pattern.finditer(reply) if m.group(1).strip()]


def extract_single(reply: str, tag: str) -> Optional[str]:
    """Text of the first ``<tag>`` span; a missing close tag runs to the end."""
    open_tag, close_tag = f"<{tag}>", f"</{tag}>"
    if open_tag in reply:
        body = reply.split(open_tag, 1)[1]
    elif close_tag in reply:
        body = reply
    else:
        return None
    body = body.split(close_tag, 1)[0].strip()
    return body or None


# ---------------------------------------------------------------------------
# Synthesis operations

def synthesize_query(gateway: LlmGateway, summary: str) -> str:
    for attempt in range(2):
        reply = gateway.generate("query_gen", {"report": summary})
        query = extract_single(reply, "r")
        if query:
            return query
    raise BuildError("query synthesis produced no <r> span after retry")


def _normalize(text: str) -> str:
    return " ".join(text.split()).lower()


def synthesize_questions(gateway: LlmGateway, summary: str, n: int = DEFAULT_N_QUESTIONS) -> list[str]:
    for attempt in range(2):
        reply = gateway.generate("question_gen", {"n": n, "document": summary})
        spans = extract_tagged(reply, "q")
        seen: set[str] = set()
        questions: list[str] = []
        for span in spans:
            key = _normalize(span)
            if key in seen:
                continue
            seen.add(key)
            questions.append(span)
            if len(questions) == n:
                break
        if questions:
            return questions
    raise BuildError("question synthesis produced no <q> spans after retry")


@dataclass(frozen=True)
class PassageDraft:
    text: str
    fallback: bool = False  # raw segment kept because no tagged passage parsed


def split_segments(
    document: str,
    tokenizer: Tokenizer = whitespace_tokenize,
    max_tokens: int = MAX_SEGMENT_TOKENS,
) -> list[str]:
    """Pre-split long documents at paragraph, then sentence, boundaries."""
    if len(tokenizer(document)) <= max_tokens:
        return [document]

    pieces: list[str] = []
    for para in re.split(r"\n\s*\n", document):
        para = para.strip()
        if not para:
            continue
        if len(tokenizer(para)) <= max_tokens:
            pieces.append(para)
            continue
        for sent in re.split(r"(?<=[.!?])\s+", para):
            sent = sent.strip()
            if not sent:
                continue
            tokens = tokenizer(sent)
            if len(tokens) <= max_tokens:
                pieces.append(sent)
            else:
                # Degenerate sentence longer than a whole segment: hard split.
                for i in range(0, len(tokens), max_tokens):
                    pieces.append(" ".join(tokens[i:i + max_tokens]))

    segments: list[str] = []
    current: list[str] = []
    current_len = 0
    for piece in pieces:
        piece_len = len(tokenizer(piece))
        if current and current_len + piece_len > max_tokens:
            segments.append("\n".join(current))
            current, current_len = [], 0
        current.append(piece)
        current_len += piece_len
    if current:
        segments.append("\n".join(current))
    return segments


def decontextualize(
    gateway: LlmGateway,
    document: str,
    tokenizer: Tokenizer = whitespace_tokenize,
    max_segment_tokens: int = MAX_SEGMENT_TOKENS,
) -> list[PassageDraft]:
    drafts: list[PassageDraft] = []
    for segment in split_segments(document, tokenizer, max_segment_tokens):
        reply = gateway.generate("passage_gen", {"document": segment})
        spans = extract_tagged(reply, "p")
        if spans:
            drafts.extend(PassageDraft(span) for span in spans)
        else:
            drafts.append(PassageDraft(segment, fallback=True))
    return drafts


# ---------------------------------------------------------------------------
# Judgment matrix and subset selection

def judge_matrix(
    topic_id: str,
    questions: Sequence[str],
    passages: Sequence[Passage],
    judge: Judge,
    max_workers: int = 8,
) -> RatingMatrix:
    if not questions or not passages:
        raise BuildError(f"topic {topic_id!r}: empty questions or passages")

    cells = [(i, j) for i in range(len(questions)) for j in range(len(passages))]

    def rate(cell: tuple[int, int]) -> int:
        i, j = cell
        try:
            return judge.rate(questions[i], passages[j].text)
        except TransportError as exc:
            raise BuildError(
                f"topic {topic_id!r}: judging failed at question {i}, "
                f"passage {passages[j].passage_id!r}: {exc}"
            ) from exc

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        flat = list(pool.map(rate, cells))

    n_cols = len(passages)
    rows = tuple(
        tuple(flat[i * n_cols:(i + 1) * n_cols]) for i in range(len(questions))
    )
    return RatingMatrix(topic_id, tuple(p.passage_id for p in passages), rows)


def filter_questions(matrix: RatingMatrix, eta: int = DEFAULT_ETA) -> list[bool]:
    """A question survives iff some oracle passage rates it at or above eta."""
    return [max(row, default=0) >= eta for row in matrix.ratings]


def build_required_subset(matrix: RatingMatrix, eta: int = DEFAULT_ETA) -> list[int]:
    """Greedy marginal-gain selection of passage columns until no uncovered
    answerable question can be answered. Ties break toward the lower index.
    """
    answerable = {i for i, keep in enumerate(filter_questions(matrix, eta)) if keep}
    answers = [
        {i for i in answerable if matrix.ratings[i][j] >= eta}
        for j in range(len(matrix.passage_ids))
    ]
    selected: list[int] = []
    uncovered = set(answerable)
    while uncovered:
        best_j, best_gain = -1, 0
        for j, ans in enumerate(answers):
            gain = len(ans & uncovered)
            if gain > best_gain:
                best_j, best_gain = j, gain
        if best_gain == 0:
            break
        selected.append(best_j)
        uncovered -= answers[best_j]

    # An early greedy pick can end up subsumed by the union of later picks;
    # prune until removing any member would strictly shrink the covered set.
    covered = set().union(*(answers[j] for j in selected)) if selected else set()
    changed = True
    while changed:
        changed = False
        for j in selected:
            rest = set().union(*(answers[i] for i in selected if i != j)) if len(selected) > 1 else set()
            if rest == covered:
                selected.remove(j)
                changed = True
                break
    return selected


# ---------------------------------------------------------------------------
# Full build

@dataclass
class BuildConfig:
    n_questions: int = DEFAULT_N_QUESTIONS
    eta: int = DEFAULT_ETA
    tokenizer: Tokenizer = whitespace_tokenize
    max_workers: int = 8


@dataclass
class DatasetBuild:
    topics: list[Topic] = field(default_factory=list)
    corpus: dict[str, Passage] = field(default_factory=dict)
    matrices: dict[str, RatingMatrix] = field(default_factory=dict)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (example_id, reason)
    fallback_passage_ids: list[str] = field(default_factory=list)


def build_topic(
    example: RawExample,
    gateway: LlmGateway,
    judge: Judge,
    config: BuildConfig,
) -> tuple[Topic, list[Passage], RatingMatrix, list[str]]:
    query = synthesize_query(gateway, example.summary)
    question_texts = synthesize_questions(gateway, example.summary, config.n_questions)

    passages: list[Passage] = []
    fallback_ids: list[str] = []
    for doc_idx, document in enumerate(example.documents):
        for p_idx, draft in enumerate(decontextualize(gateway, document, config.tokenizer)):
            pid = f"{example.example_id}-d{doc_idx}-p{p_idx}"
            passages.append(
                Passage(
                    passage_id=pid,
                    source_doc_id=f"{example.example_id}-d{doc_idx}",
                    text=draft.text,
                    token_count=len(config.tokenizer(draft.text)),
                )
            )
            if draft.fallback:
                fallback_ids.append(pid)

    matrix = judge_matrix(example.example_id, question_texts, passages, judge, config.max_workers)
    answerable = filter_questions(matrix, config.eta)
    if not any(answerable):
        raise BuildError(f"example {example.example_id!r}: no answerable questions at eta={config.eta}")
    required = build_required_subset(matrix, config.eta)

    topic = Topic(
        topic_id=example.example_id,
        query=query,
        summary=example.summary,
        questions=tuple(
            SubQuestion(i, text, answerable[i]) for i, text in enumerate(question_texts)
        ),
        oracle_passage_ids=tuple(p.passage_id for p in passages),
        required_subset_ids=tuple(passages[j].passage_id for j in required),
    )
    return topic, passages, matrix, fallback_ids


def build_dataset(
    examples: Iterable[RawExample],
    gateway: LlmGateway,
    judge: Judge,
    config: Optional[BuildConfig] = None,
) -> DatasetBuild:
    config = config or BuildConfig()
    build = DatasetBuild()
    for example in examples:
        try:
            topic, passages, matrix, fallback_ids = build_topic(example, gateway, judge, config)
        except BuildError as exc:
            logger.warning("skipping example %s: %s", example.example_id, exc)
            build.skipped.append((example.example_id, str(exc)))
            continue
        build.topics.append(topic)
        build.matrices[topic.topic_id] = matrix
        build.fallback_passage_ids.extend(fallback_ids)
        for passage in passages:
            build.corpus[passage.passage_id] = passage
    return build
