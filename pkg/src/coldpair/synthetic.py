"""Synthetic corpora and ratings for tests, benchmarks and scale checks."""

from __future__ import annotations

import numpy as np

from .corpus import Document
from .evaluation import GroundTruth


def _sample_tokens(rng, vocab: list[str], n: int, zipf: bool = True) -> list[str]:
    if zipf:
        # mild Zipf-like skew so token frequencies are not uniform
        ranks = np.arange(1, len(vocab) + 1, dtype=np.float64)
        p = (1.0 / ranks) / np.sum(1.0 / ranks)
        picks = rng.choice(len(vocab), size=n, p=p)
    else:
        picks = rng.integers(0, len(vocab), size=n)
    return [vocab[i] for i in picks]


def two_cluster_corpus(n_docs_per_cluster: int = 100, vocab_size: int = 50,
                       doc_len: int = 80, seed: int = 0) -> list[Document]:
    """Two groups of documents drawn from disjoint token vocabularies."""
    rng = np.random.default_rng(seed)
    docs = []
    for cluster in range(2):
        vocab = [f"cl{cluster}tok{i:03d}" for i in range(vocab_size)]
        for d in range(n_docs_per_cluster):
            body = " ".join(_sample_tokens(rng, vocab, doc_len))
            docs.append(Document(id=f"c{cluster}_{d:03d}", body=body,
                                 classification=str(cluster), warm=True))
    return docs


def boilerplate_corpus(n_docs: int = 300, n_clusters: int = 6,
                       doc_len: int = 100, boiler_frac: float = 0.7,
                       boiler_vocab_size: int = 40,
                       cluster_vocab_size: int = 60,
                       requirements_len: int = 10,
                       dialects: int = 1,
                       seed: int = 0) -> list[Document]:
    """Documents sharing a large boilerplate portion, distinguished only by a
    minority of cluster-specific tokens; the cluster tokens also populate the
    requirements field so enrichment can amplify them.

    With dialects > 1 each cluster's vocabulary is split into that many
    disjoint surface variants: a body draws its specific tokens from one
    dialect only, while the requirements field draws from the whole cluster
    vocabulary. Same-cluster documents in different dialects then share
    almost no body tokens, so lexical matchers need the requirements bridge.
    """
    rng = np.random.default_rng(seed)
    boiler_vocab = [f"boiler{i:03d}" for i in range(boiler_vocab_size)]
    cluster_vocabs = [[f"c{c}spec{i:03d}" for i in range(cluster_vocab_size)]
                      for c in range(n_clusters)]
    n_boiler = int(round(doc_len * boiler_frac))
    n_specific = doc_len - n_boiler
    docs = []
    for d in range(n_docs):
        cluster = d % n_clusters
        vocab = cluster_vocabs[cluster]
        if dialects > 1:
            dialect = (d // n_clusters) % dialects
            span = len(vocab) // dialects
            body_vocab = vocab[dialect * span:(dialect + 1) * span]
        else:
            body_vocab = vocab
        body_tokens = _sample_tokens(rng, boiler_vocab, n_boiler) \
            + _sample_tokens(rng, body_vocab, n_specific)
        rng.shuffle(body_tokens)
        reqs = " ".join(_sample_tokens(rng, vocab, requirements_len))
        docs.append(Document(id=f"d{d:04d}", body=" ".join(body_tokens),
                             classification=str(cluster), requirements=reqs,
                             warm=True))
    return docs


def truth_from_clusters(docs: list[Document],
                        n_queries: int | None = None,
                        seed: int = 0) -> GroundTruth:
    """Ground truth: a query's relevant set is every other same-cluster doc."""
    rng = np.random.default_rng(seed)
    by_cluster: dict[str, list[str]] = {}
    for d in docs:
        by_cluster.setdefault(d.classification or "", []).append(d.id)
    ids = [d.id for d in docs]
    if n_queries is not None and n_queries < len(ids):
        picks = rng.choice(len(ids), size=n_queries, replace=False)
        ids = [ids[i] for i in sorted(picks)]
    labels = {d.id: d.classification or "" for d in docs}
    return {q: set(by_cluster[labels[q]]) - {q} for q in ids}


def scale_corpus(n_docs: int = 10000, n_clusters: int = 20, doc_len: int = 60,
                 cold_frac: float = 0.02, seed: int = 0) -> list[Document]:
    """Large clustered corpus with a small cold fraction, for scale checks."""
    rng = np.random.default_rng(seed)
    shared = [f"common{i:03d}" for i in range(100)]
    cluster_vocabs = [[f"g{c:02d}w{i:03d}" for i in range(80)]
                      for c in range(n_clusters)]
    n_cold = int(round(n_docs * cold_frac))
    docs = []
    for d in range(n_docs):
        cluster = d % n_clusters
        tokens = _sample_tokens(rng, shared, doc_len // 2) \
            + _sample_tokens(rng, cluster_vocabs[cluster], doc_len - doc_len // 2)
        rng.shuffle(tokens)
        docs.append(Document(id=f"s{d:05d}", body=" ".join(tokens),
                             classification=str(cluster),
                             warm=d >= n_cold))
    return docs


def random_ratings(docs: list[Document], n_users: int = 50,
                   ratings_per_user: int = 10, seed: int = 0
                   ) -> list[tuple[str, str, float]]:
    """Random (user, warm item, rating) triples, one rating per pair."""
    rng = np.random.default_rng(seed)
    warm_ids = [d.id for d in docs if d.warm]
    rows = []
    for u in range(n_users):
        count = min(ratings_per_user, len(warm_ids))
        picks = rng.choice(len(warm_ids), size=count, replace=False)
        for i in picks:
            rows.append((f"u{u:03d}", warm_ids[i],
                         float(rng.integers(1, 6))))
    return rows


def write_corpus_jsonl(docs: list[Document], path) -> None:
    import json
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            record = {"id": d.id, "body": d.body, "warm": d.warm}
            if d.title:
                record["title"] = d.title
            if d.classification is not None:
                record["classification"] = d.classification
            if d.location is not None:
                record["location"] = d.location
            if d.requirements is not None:
                record["requirements"] = d.requirements
            if d.skills is not None:
                record["skills"] = d.skills
            fh.write(json.dumps(record) + "\n")


def write_ratings_tsv(rows: list[tuple[str, str, float]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for user, item, rating in rows:
            fh.write(f"{user}\t{item}\t{rating:g}\n")
