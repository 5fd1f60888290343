"""Cosine similarity, brute-force top-k retrieval, and cold-to-warm pairing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO, Union

import numpy as np
import scipy.sparse as sp

from .tfidf import SparseVector

Vector = Union[np.ndarray, SparseVector]

DEFAULT_PAIR_THRESHOLD = 0.5


class SimilarityError(ValueError):
    """Raised for undefined similarities (zero-norm vectors) or empty indexes."""


def _norm(v: Vector) -> float:
    if isinstance(v, SparseVector):
        return v.norm()
    return float(np.linalg.norm(v))


def cosine(u: Vector, v: Vector) -> float:
    """u.v / (|u||v|); raises on zero-norm input."""
    nu, nv = _norm(u), _norm(v)
    if nu == 0.0 or nv == 0.0:
        raise SimilarityError("cosine similarity is undefined for zero-norm vectors")
    if isinstance(u, SparseVector) and isinstance(v, SparseVector):
        dot = u.dot(v)
    else:
        dot = float(np.dot(np.asarray(u, dtype=np.float64),
                           np.asarray(v, dtype=np.float64)))
    return dot / (nu * nv)


class SimilarityIndex:
    """Immutable brute-force cosine index over dense or sparse vectors."""

    def __init__(self, kind: str, dim: Optional[int] = None):
        if kind not in ("tfidf", "lda", "doc2vec"):
            raise ValueError(f"unknown vector kind {kind!r}")
        self.kind = kind
        self.ids: list[str] = []
        self._vectors: list[Vector] = []
        self._dim = dim
        self._matrix = None  # built lazily, row-normalized

    def add(self, doc_id: str, vector: Vector) -> None:
        if doc_id in set(self.ids):
            raise ValueError(f"duplicate id {doc_id!r} in index")
        if _norm(vector) == 0.0:
            raise SimilarityError(f"zero-norm vector rejected for {doc_id!r}")
        self.ids.append(doc_id)
        self._vectors.append(vector)
        self._matrix = None

    def __len__(self) -> int:
        return len(self.ids)

    def vector(self, doc_id: str) -> Vector:
        return self._vectors[self.ids.index(doc_id)]

    def _build_matrix(self):
        if self._matrix is not None:
            return
        if isinstance(self._vectors[0], SparseVector):
            dim = self._dim or (max(int(v.indices.max()) for v in self._vectors
                                    if len(v)) + 1)
            rows, cols, vals = [], [], []
            for r, v in enumerate(self._vectors):
                rows.extend([r] * len(v))
                cols.extend(v.indices.tolist())
                vals.extend(v.weights.tolist())
            mat = sp.csr_matrix((vals, (rows, cols)),
                                shape=(len(self._vectors), dim))
            norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
            self._matrix = sp.diags(1.0 / norms) @ mat
        else:
            mat = np.vstack([np.asarray(v, dtype=np.float64)
                             for v in self._vectors])
            self._matrix = mat / np.linalg.norm(mat, axis=1, keepdims=True)

    def scores(self, query: Vector) -> np.ndarray:
        """Cosine of the query against every indexed vector."""
        qn = _norm(query)
        if qn == 0.0:
            raise SimilarityError("zero-norm query")
        self._build_matrix()
        if isinstance(query, SparseVector):
            dim = self._matrix.shape[1]
            q = sp.csr_matrix((query.weights, (np.zeros(len(query), dtype=int),
                                               query.indices)), shape=(1, dim))
            return (self._matrix @ q.T).toarray().ravel() / qn
        return np.asarray(self._matrix @ (np.asarray(query, dtype=np.float64) / qn))


def top_k_similar(index: SimilarityIndex, query: Vector, k: int,
                  exclude: Optional[str] = None) -> list[tuple[str, float]]:
    """k highest-cosine entries, descending score, ties by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        raise SimilarityError("cannot query an empty index")
    scores = index.scores(query)
    ranked = sorted(
        ((doc_id, float(s)) for doc_id, s in zip(index.ids, scores)
         if doc_id != exclude),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:k]


@dataclass
class PairingTable:
    """cold_id -> [(warm_id, score)] sorted by descending score then warm_id."""

    pairs: dict[str, list[tuple[str, float]]] = field(default_factory=dict)

    def paired_ids(self) -> list[str]:
        return [c for c, lst in self.pairs.items() if lst]

    def unpaired_ids(self) -> list[str]:
        return [c for c, lst in self.pairs.items() if not lst]


def pair_cold_items(cold_index: SimilarityIndex, warm_index: SimilarityIndex,
                    top_m: int = 1,
                    threshold: float = DEFAULT_PAIR_THRESHOLD) -> PairingTable:
    """For each cold item, keep its top_m warm neighbors scoring >= threshold.

    Cold items with no qualifying neighbor get an empty list (unpaired).
    """
    if len(warm_index) == 0:
        raise SimilarityError("cannot pair against an empty warm set")
    table = PairingTable()
    for cold_id, vec in zip(cold_index.ids, cold_index._vectors):
        neighbors = top_k_similar(warm_index, vec, top_m)
        table.pairs[cold_id] = [(w, s) for w, s in neighbors if s >= threshold]
    return table


def save_pairs(table: PairingTable, fh: TextIO) -> None:
    fh.write("cold_id\twarm_id\tscore\n")
    for cold_id, lst in table.pairs.items():
        if not lst:
            fh.write(f"{cold_id}\t-\tnan\n")
        for warm_id, score in lst:
            fh.write(f"{cold_id}\t{warm_id}\t{score:.6f}\n")


def load_pairs(fh: TextIO) -> PairingTable:
    header = fh.readline()
    if not header.startswith("cold_id"):
        raise ValueError("pairing file: missing header")
    table = PairingTable()
    for line in fh:
        cold_id, warm_id, score = line.rstrip("\n").split("\t")
        lst = table.pairs.setdefault(cold_id, [])
        if warm_id != "-":
            lst.append((warm_id, float(score)))
    return table
