"""Linguistic module: pluggable text embeddings for cells and fields.

The default provider hashes character n-grams (signed feature hashing);
any external model can be injected offline through ``PrecomputedEmbedder``.
"""
from __future__ import annotations

import hashlib
import json
from functools import lru_cache
from typing import Protocol

import numpy as np

from . import kernels
from .errors import IndexOutOfRange
from .table import Cell, CellKind, Table

MAX_TOKENS = 30
FIELD_CONTEXT_ROWS = 50
HEADER_WEIGHT, CELLS_WEIGHT, CONTEXT_WEIGHT = 2.0, 1.0, 0.5
_BOS, _EOS = 0x02, 0x03


class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> np.ndarray: ...

    def dimension(self) -> int: ...


class HashedNGramEmbedder:
    def __init__(self, dim: int = 64, ngram_sizes=(2, 3), seed: int = 0, cache_size: int = 1 << 16):
        self.dim = int(dim)
        self.ngram_sizes = tuple(int(n) for n in ngram_sizes)
        self.seed = int(seed)
        self._sizes = np.array(self.ngram_sizes, dtype=np.int64)
        self._cached = lru_cache(maxsize=cache_size)(self._embed)

    def dimension(self) -> int:
        return self.dim

    def _embed(self, text: str) -> np.ndarray:
        if not text:
            return np.zeros(self.dim)
        codes = np.array([_BOS, *map(ord, text.lower()), _EOS], dtype=np.uint64)
        v = kernels.hash_ngrams(codes, self._sizes, self.dim, self.seed)
        norm = np.linalg.norm(v)
        if norm > 0:
            v /= norm
        v.setflags(write=False)
        return v

    def embed(self, text: str) -> np.ndarray:
        return self._cached(text)

    def __repr__(self):
        return f"HashedNGramEmbedder(dim={self.dim}, ngram_sizes={self.ngram_sizes}, seed={self.seed})"


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class PrecomputedEmbedder:
    """Vectors looked up by sha256 of the text from a ``{text_hash, vector}`` JSONL file.

    Texts absent from the file go to ``fallback`` if given, else the zero vector.
    """

    def __init__(self, path, fallback: EmbeddingProvider | None = None):
        self._table: dict[str, np.ndarray] = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                doc = json.loads(line)
                vec = np.asarray(doc["vector"], dtype=np.float64)
                if dim is None:
                    dim = vec.shape[0]
                elif vec.shape[0] != dim:
                    raise ValueError(f"inconsistent vector length in {path}")
                vec.setflags(write=False)
                self._table[doc["text_hash"]] = vec
        if dim is None:
            dim = fallback.dimension() if fallback is not None else 0
        if fallback is not None and fallback.dimension() != dim:
            raise ValueError("fallback provider dimension differs from file vectors")
        self._dim = dim
        self._fallback = fallback

    def dimension(self) -> int:
        return self._dim

    def embed(self, text: str) -> np.ndarray:
        vec = self._table.get(text_hash(text))
        if vec is not None:
            return vec
        if self._fallback is not None:
            return self._fallback.embed(text)
        return np.zeros(self._dim)


def truncate_tokens(text: str, limit: int = MAX_TOKENS) -> str:
    return " ".join(text.split()[:limit])


def embed_text(provider: EmbeddingProvider, text: str) -> np.ndarray:
    return provider.embed(truncate_tokens(text))


def embed_cell(provider: EmbeddingProvider, cell: Cell) -> np.ndarray:
    if cell.kind is CellKind.BLANK:
        return np.zeros(provider.dimension())
    return embed_text(provider, cell.text())


def embed_field_context(provider: EmbeddingProvider, table: Table, field_index: int) -> np.ndarray:
    if not 0 <= field_index < len(table.fields):
        raise IndexOutOfRange(f"field index {field_index} out of range")
    dim = provider.dimension()
    field = table.fields[field_index]
    header = embed_text(provider, field.header)
    cells = field.cells[:FIELD_CONTEXT_ROWS]
    body = np.mean([embed_cell(provider, c) for c in cells], axis=0) if cells else np.zeros(dim)
    # sorted so the sum is bitwise independent of field order
    others = [embed_text(provider, h) for h in sorted(f.header for f in table.fields if f.index != field_index)]
    context = np.mean(others, axis=0) if others else np.zeros(dim)
    v = HEADER_WEIGHT * header + CELLS_WEIGHT * body + CONTEXT_WEIGHT * context
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v
