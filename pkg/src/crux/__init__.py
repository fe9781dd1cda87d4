"""Controlled evaluation of retrieval-augmented contexts for long-form RAG."""

__version__ = "0.1.0"
