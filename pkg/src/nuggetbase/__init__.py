"""Governed atomic-fact store and retriever for grounded generation.

The package turns evolving document streams into atomic fact records with
explicit validity windows and an audited lifecycle (Active, Contested,
Deprecated), then serves time-scoped hybrid retrieval over them.
"""
from .canonicalize import AliasTable, PredicateSchema, Schema, discover_schema
from .config import Config
from .extraction import Document, RuleExtractor, parse_documents_jsonl
from .governance import Decision, IntegrationOutcome, integrate, resolve_contested
from .index import NuggetEngine, RecordStore
from .model import (
    EpistemicState,
    Evidence,
    FactTriple,
    NuggetKey,
    NuggetKind,
    NuggetRecord,
    Provenance,
    Rank,
    Scope,
    SourceType,
    Status,
    ValidityInterval,
    View,
    compute_nugget_id,
)
from .pipeline import IngestReport, ingest_documents
from .retrieval import Query, RetrievalResult, format_context, retrieve
from .validity import infer_validity, tag_temporal_expressions

__version__ = "0.1.0"

__all__ = [
    "AliasTable",
    "Config",
    "Decision",
    "Document",
    "EpistemicState",
    "Evidence",
    "FactTriple",
    "IngestReport",
    "IntegrationOutcome",
    "NuggetEngine",
    "NuggetKey",
    "NuggetKind",
    "NuggetRecord",
    "PredicateSchema",
    "Provenance",
    "Query",
    "Rank",
    "RecordStore",
    "RetrievalResult",
    "RuleExtractor",
    "Schema",
    "Scope",
    "SourceType",
    "Status",
    "ValidityInterval",
    "View",
    "compute_nugget_id",
    "discover_schema",
    "format_context",
    "infer_validity",
    "ingest_documents",
    "integrate",
    "parse_documents_jsonl",
    "resolve_contested",
    "retrieve",
    "tag_temporal_expressions",
]
