"""Topic-model embedding: collapsed Gibbs LDA and topic-proportion vectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import BinaryIO, Callable, Optional, Sequence

import numpy as np

from .corpus import CorpusError, TokenizedDocument, Vocabulary


@dataclass
class LdaModel:
    n_topics: int
    alpha: float
    beta: float
    topic_word_counts: np.ndarray  # (K, V) int64
    topic_totals: np.ndarray  # (K,) int64
    vocab: Vocabulary
    seed: int
    # (sweep, training perplexity) pairs, recorded every 10 sweeps when enabled
    perplexity_trace: list[tuple[int, float]] = field(default_factory=list)


def _doc_indices(docs: Sequence[TokenizedDocument], vocab: Vocabulary) -> list[np.ndarray]:
    out = []
    for d in docs:
        idx = [vocab.index_of(t) for t in d.tokens if t in vocab]
        out.append(np.array(idx, dtype=np.int64))
    return out


def _perplexity(doc_words: list[np.ndarray], doc_topic: np.ndarray,
                topic_word: np.ndarray, topic_totals: np.ndarray,
                alpha: float, beta: float) -> float:
    """Training-set perplexity from the current count state."""
    K, V = topic_word.shape
    phi = (topic_word + beta) / (topic_totals[:, None] + V * beta)  # (K, V)
    log_lik = 0.0
    n_tokens = 0
    for d, words in enumerate(doc_words):
        if len(words) == 0:
            continue
        theta = (doc_topic[d] + alpha) / (len(words) + K * alpha)
        p = theta @ phi[:, words]
        log_lik += float(np.sum(np.log(p)))
        n_tokens += len(words)
    if n_tokens == 0:
        return float("nan")
    return float(np.exp(-log_lik / n_tokens))


def fit_lda(docs: Sequence[TokenizedDocument], n_topics: int, sweeps: int,
            alpha: Optional[float] = None, beta: float = 0.01,
            seed: int = 0, vocab: Optional[Vocabulary] = None,
            track_perplexity: bool = False,
            sweep_hook: Optional[Callable[[int, np.ndarray, np.ndarray,
                                           np.ndarray], None]] = None
            ) -> LdaModel:
    """Collapsed Gibbs sampling: resample each token's topic from the
    conditional (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta).

    Single-threaded and deterministic for a fixed seed. When given,
    sweep_hook(sweep, topic_word, topic_totals, doc_topic) is called after
    every sweep with the live count arrays, for invariant checking.
    """
    if n_topics < 1:
        raise ValueError("n_topics must be >= 1")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    if not docs:
        raise CorpusError("cannot fit LDA on an empty corpus")
    if alpha is None:
        alpha = 50.0 / n_topics
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be > 0")
    if vocab is None:
        from .corpus import build_vocabulary
        vocab = build_vocabulary(docs, min_count=1)

    K, V = n_topics, vocab.size
    rng = np.random.default_rng(seed)
    doc_words = _doc_indices(docs, vocab)

    topic_word = np.zeros((K, V), dtype=np.int64)
    topic_totals = np.zeros(K, dtype=np.int64)
    doc_topic = np.zeros((len(docs), K), dtype=np.int64)
    assignments = []
    for d, words in enumerate(doc_words):
        z = rng.integers(0, K, size=len(words))
        assignments.append(z)
        for w, k in zip(words, z):
            topic_word[k, w] += 1
            topic_totals[k] += 1
            doc_topic[d, k] += 1

    trace: list[tuple[int, float]] = []
    for sweep in range(1, sweeps + 1):
        for d, words in enumerate(doc_words):
            z = assignments[d]
            for i in range(len(words)):
                w, k = words[i], z[i]
                topic_word[k, w] -= 1
                topic_totals[k] -= 1
                doc_topic[d, k] -= 1
                p = (doc_topic[d] + alpha) * (topic_word[:, w] + beta) \
                    / (topic_totals + V * beta)
                cdf = np.cumsum(p)
                k = int(np.searchsorted(cdf, rng.random() * cdf[-1]))
                z[i] = k
                topic_word[k, w] += 1
                topic_totals[k] += 1
                doc_topic[d, k] += 1
        if sweep_hook is not None:
            sweep_hook(sweep, topic_word, topic_totals, doc_topic)
        if track_perplexity and sweep % 10 == 0:
            trace.append((sweep, _perplexity(doc_words, doc_topic, topic_word,
                                             topic_totals, alpha, beta)))

    return LdaModel(n_topics=K, alpha=alpha, beta=beta,
                    topic_word_counts=topic_word, topic_totals=topic_totals,
                    vocab=vocab, seed=seed, perplexity_trace=trace)


def lda_doc_vector(model: LdaModel, doc: TokenizedDocument,
                   fold_in_sweeps: int = 50, seed: int = 0) -> np.ndarray:
    """Fold a document in with topic-word counts frozen; return normalized
    (doc_topic_count + alpha) proportions.

    A document with no in-vocabulary tokens gets the uniform vector.
    """
    K, V = model.n_topics, model.vocab.size
    words = np.array([model.vocab.index_of(t) for t in doc.tokens
                      if t in model.vocab], dtype=np.int64)
    if len(words) == 0:
        return np.full(K, 1.0 / K)

    rng = np.random.default_rng(seed)
    phi = (model.topic_word_counts + model.beta) \
        / (model.topic_totals[:, None] + V * model.beta)  # frozen
    z = rng.integers(0, K, size=len(words))
    counts = np.bincount(z, minlength=K).astype(np.int64)
    for _ in range(fold_in_sweeps):
        for i in range(len(words)):
            w, k = words[i], z[i]
            counts[k] -= 1
            p = (counts + model.alpha) * phi[:, w]
            cdf = np.cumsum(p)
            k = int(np.searchsorted(cdf, rng.random() * cdf[-1]))
            z[i] = k
            counts[k] += 1
    theta = counts + model.alpha
    return theta / theta.sum()


def save_lda(model: LdaModel, fh: BinaryIO) -> None:
    header = (f"K={model.n_topics} alpha={model.alpha!r} beta={model.beta!r} "
              f"V={model.vocab.size} seed={model.seed}\n")
    fh.write(header.encode())
    np.save(fh, model.topic_word_counts, allow_pickle=False)


def load_lda(fh: BinaryIO, vocab: Vocabulary) -> LdaModel:
    fields = dict(kv.split("=") for kv in fh.readline().decode().split())
    topic_word = np.load(fh, allow_pickle=False)
    if topic_word.shape != (int(fields["K"]), int(fields["V"])):
        raise CorpusError("LDA model file: count matrix shape mismatch")
    if int(fields["V"]) != vocab.size:
        raise CorpusError("LDA model file: vocabulary size mismatch")
    return LdaModel(n_topics=int(fields["K"]), alpha=float(fields["alpha"]),
                    beta=float(fields["beta"]), topic_word_counts=topic_word,
                    topic_totals=topic_word.sum(axis=1), vocab=vocab,
                    seed=int(fields["seed"]))
