"""Sparse tf-idf vectors: weight = raw term count * ln(N / (1 + df))."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from .corpus import CorpusError, TokenizedDocument, Vocabulary


@dataclass
class SparseVector:
    """Sorted (index, weight) pairs; no explicit zeros."""

    indices: np.ndarray  # int64, strictly increasing
    weights: np.ndarray  # float64

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, float]]) -> "SparseVector":
        pairs = sorted((i, w) for i, w in pairs if w != 0.0)
        idx = np.array([p[0] for p in pairs], dtype=np.int64)
        wts = np.array([p[1] for p in pairs], dtype=np.float64)
        return cls(idx, wts)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.weights, self.weights)))

    def dot(self, other: "SparseVector") -> float:
        # merge join over sorted indices
        total = 0.0
        i = j = 0
        a_idx, b_idx = self.indices, other.indices
        while i < len(a_idx) and j < len(b_idx):
            if a_idx[i] == b_idx[j]:
                total += self.weights[i] * other.weights[j]
                i += 1
                j += 1
            elif a_idx[i] < b_idx[j]:
                i += 1
            else:
                j += 1
        return total

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class TfIdfModel:
    n_docs: int
    df: dict[str, int]  # document frequency per retained token
    vocab: Vocabulary

    def idf(self, token: str) -> float:
        return math.log(self.n_docs / (1 + self.df.get(token, 0)))


def fit_tfidf(docs: Sequence[TokenizedDocument], vocab: Vocabulary) -> TfIdfModel:
    if not docs:
        raise CorpusError("cannot fit tf-idf on an empty corpus")
    df = Counter()
    for d in docs:
        df.update(set(d.tokens) & vocab.token_to_index.keys())
    return TfIdfModel(n_docs=len(docs), df=dict(df), vocab=vocab)


def transform_tfidf(model: TfIdfModel, doc: TokenizedDocument) -> SparseVector:
    """Raw count times idf per in-vocabulary token; not length-normalized."""
    counts = Counter(t for t in doc.tokens if t in model.vocab)
    pairs = [(model.vocab.index_of(t), c * model.idf(t)) for t, c in counts.items()]
    return SparseVector.from_pairs(pairs)


def save_tfidf(model: TfIdfModel, fh: TextIO) -> None:
    fh.write(f"N={model.n_docs}\n")
    for token in model.vocab.index_to_token:
        fh.write(f"{token}\t{model.df.get(token, 0)}\n")


def load_tfidf(fh: TextIO, vocab: Vocabulary) -> TfIdfModel:
    header = fh.readline().strip()
    if not header.startswith("N="):
        raise CorpusError("tf-idf model file: missing N= header")
    n_docs = int(header[2:])
    df = {}
    for line in fh:
        token, count = line.rstrip("\n").split("\t")
        df[token] = int(count)
    return TfIdfModel(n_docs=n_docs, df=df, vocab=vocab)
