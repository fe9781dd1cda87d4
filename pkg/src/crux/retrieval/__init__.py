"""Ranking and context assembly: BM25, dense search, re-ranking, budgets."""

from .assemble import HARD_TOKEN_CAP, Budget, assemble_context
from .dense import CorpusEmbeddings, EmbeddingProvider, HashingEmbedder, dense_search, embed_corpus
from .index import (
    InvertedIndex,
    RankedList,
    bm25_idf,
    bm25_search,
    build_index,
    default_analyzer,
    load_index,
    plain_analyzer,
    save_index,
)
from .rerank import external_rerank, mmr_rerank
from .runfile import load_run, save_run

__all__ = [
    "Budget",
    "CorpusEmbeddings",
    "EmbeddingProvider",
    "HARD_TOKEN_CAP",
    "HashingEmbedder",
    "InvertedIndex",
    "RankedList",
    "assemble_context",
    "bm25_idf",
    "bm25_search",
    "build_index",
    "default_analyzer",
    "dense_search",
    "embed_corpus",
    "external_rerank",
    "load_index",
    "load_run",
    "mmr_rerank",
    "plain_analyzer",
    "save_index",
    "save_run",
]
