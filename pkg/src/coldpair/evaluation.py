"""Retrieval benchmark: precision@k / recall@k per embedding backend."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TextIO

from .backends import CONTEXT_SUFFIX, BackendConfig, Embedder, parse_backend_name
from .corpus import Document
from .matcher import top_k_similar

DEFAULT_KS = (10, 20, 30, 50)

# Table-style row order: plain backends first, then enriched variants.
_ROW_ORDER = ("tfidf", "lda", "doc2vec",
              "tfidf+context", "lda+context", "doc2vec+context")


class EvalError(ValueError):
    pass


GroundTruth = dict[str, set[str]]  # query doc id -> relevant doc ids


@dataclass
class BackendMetrics:
    backend: str
    precision_at_10: float
    recall_at: dict[int, float]
    runtime_seconds: float


@dataclass
class MetricsReport:
    rows: list[BackendMetrics]
    ks: tuple[int, ...]

    def to_text(self, include_runtime: bool = True) -> str:
        """TSV text; runtimes are machine-dependent and can be left out to
        keep the persisted report byte-reproducible."""
        header = ["backend", "prec@10"] + [f"recall@{k}" for k in self.ks]
        if include_runtime:
            header.append("seconds")
        lines = ["\t".join(header)]
        for row in self.rows:
            cells = [row.backend, f"{row.precision_at_10:.4f}"]
            cells += [f"{row.recall_at[k]:.4f}" for k in self.ks]
            if include_runtime:
                cells.append(f"{row.runtime_seconds:.2f}")
            lines.append("\t".join(cells))
        return "\n".join(lines) + "\n"


def precision_at_k(retrieved: Sequence[str], relevant: set[str], k: int) -> float:
    """|top-k intersect relevant| / min(k, |retrieved|); 0 for empty retrieval."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not retrieved:
        return 0.0
    top = retrieved[:k]
    return sum(1 for doc_id in top if doc_id in relevant) / min(k, len(retrieved))


def recall_at_k(retrieved: Sequence[str], relevant: set[str], k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise EvalError("recall is undefined for an empty relevant set")
    top = retrieved[:k]
    return sum(1 for doc_id in top if doc_id in relevant) / len(relevant)


def load_truth(fh: TextIO) -> GroundTruth:
    """TSV of query_id, relevant_id pairs."""
    truth: GroundTruth = {}
    for line in fh:
        line = line.rstrip("\n")
        if not line:
            continue
        query_id, relevant_id = line.split("\t")
        truth.setdefault(query_id, set()).add(relevant_id)
    return truth


def save_truth(truth: GroundTruth, fh: TextIO) -> None:
    for query_id in truth:
        for relevant_id in sorted(truth[query_id]):
            fh.write(f"{query_id}\t{relevant_id}\n")


def order_backends(names: Sequence[str]) -> list[str]:
    known = [n for n in _ROW_ORDER if n in names]
    extra = [n for n in names if n not in _ROW_ORDER]
    return known + extra


def run_benchmark(docs: Sequence[Document], truth: GroundTruth,
                  backends: Sequence[str], ks: Sequence[int] = DEFAULT_KS,
                  seed: int = 0,
                  config_factory: Optional[Callable[[str], BackendConfig]] = None,
                  ) -> MetricsReport:
    """Embed the corpus per backend, retrieve top max(ks) neighbors per truth
    query (self excluded), and average precision@10 / recall@k over queries."""
    by_id = {d.id: d for d in docs}
    missing = [q for q in truth if q not in by_id]
    if missing:
        raise EvalError(f"truth queries missing from corpus: {missing[:5]}")
    ks = tuple(sorted(ks))
    max_k = max(ks + (10,))
    rows = []
    for name in order_backends(backends):
        parse_backend_name(name)  # validate
        if config_factory is not None:
            cfg = config_factory(name)
        else:
            cfg = BackendConfig(name=name, seed=seed)
        started = time.perf_counter()
        embedder = Embedder(cfg).fit(docs)
        index = embedder.build_index(docs)
        prec_sum = 0.0
        recall_sums = {k: 0.0 for k in ks}
        for query_id in truth:
            hits = top_k_similar(index, index.vector(query_id), max_k,
                                 exclude=query_id)
            retrieved = [doc_id for doc_id, _ in hits]
            prec_sum += precision_at_k(retrieved, truth[query_id], 10)
            for k in ks:
                recall_sums[k] += recall_at_k(retrieved, truth[query_id], k)
        n_queries = max(1, len(truth))
        rows.append(BackendMetrics(
            backend=name,
            precision_at_10=prec_sum / n_queries,
            recall_at={k: recall_sums[k] / n_queries for k in ks},
            runtime_seconds=time.perf_counter() - started,
        ))
    return MetricsReport(rows=rows, ks=ks)
