from .dense import DenseIndex, HashedTrigramEmbedder, HnswGraph
from .engine import NuggetEngine
from .metadata import MetadataIndex
from .sparse import Bm25Index, tokenize
from .storage import RecordStore

__all__ = [
    "Bm25Index",
    "DenseIndex",
    "HashedTrigramEmbedder",
    "HnswGraph",
    "MetadataIndex",
    "NuggetEngine",
    "RecordStore",
    "tokenize",
]
