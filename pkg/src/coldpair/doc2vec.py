"""Paragraph-vector (PV-DM, mean combination) training and inference.

The center word is predicted from the mean of the paragraph vector and the
in-window word vectors. The softmax over the vocabulary is approximated by
negative sampling (k noise words from the unigram^0.75 distribution); an
exact-softmax mode (negative_k=0) exists for small-vocabulary verification.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Optional, Sequence

import numpy as np

from .corpus import CorpusError, TokenizedDocument, Vocabulary

logger = logging.getLogger(__name__)

_EXACT_SOFTMAX_MAX_V = 2000


@dataclass
class TrainConfig:
    dim: int = 100
    epochs: int = 1
    lr_start: float = 0.025
    lr_end: float = 0.0001
    negative_k: int = 5
    window: int = 5
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (self.lr_start >= self.lr_end > 0):
            raise ValueError("require lr_start >= lr_end > 0")
        if self.negative_k < 0:
            raise ValueError("negative_k must be >= 0")


@dataclass
class Doc2VecModel:
    dim: int
    window: int
    word_in: np.ndarray   # (V, dim) float32
    word_out: np.ndarray  # (V, dim) float32, softmax/output parameters
    doc_vecs: np.ndarray  # (D, dim) float32, one paragraph vector per doc
    vocab: Vocabulary
    doc_ids: list[str]
    seed: int
    noise_cdf: np.ndarray = field(default=None, repr=False)
    epoch_losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.noise_cdf is None:
            self.noise_cdf = _noise_cdf(self.vocab)
        self._row = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}

    def doc_vector(self, doc_id: str) -> np.ndarray:
        """Stored paragraph vector for a training document (a copy)."""
        if doc_id not in self._row:
            raise KeyError(f"unknown document id {doc_id!r}")
        return self.doc_vecs[self._row[doc_id]].copy()

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._row


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _noise_cdf(vocab: Vocabulary) -> np.ndarray:
    """Cumulative unigram^0.75 distribution for negative sampling."""
    freq = np.array([vocab.frequency[t] for t in vocab.index_to_token],
                    dtype=np.float64)
    weights = freq ** 0.75
    return np.cumsum(weights / weights.sum())


def negative_sampling_loss(context_mean: np.ndarray, target: int,
                           negatives: Sequence[int],
                           word_out: np.ndarray) -> float:
    """-log sigma(h . v_target) - sum_neg log sigma(-h . v_neg)."""
    h = np.asarray(context_mean, dtype=np.float64)
    loss = -np.log(_sigmoid(float(h @ word_out[target])))
    for n in negatives:
        loss -= np.log(_sigmoid(-float(h @ word_out[n])))
    return float(loss)


def negative_sampling_grads(context_mean: np.ndarray, target: int,
                            negatives: Sequence[int], word_out: np.ndarray):
    """Analytic gradients of negative_sampling_loss.

    Returns (grad wrt context_mean, {row index: grad wrt that word_out row}).
    Duplicate negative rows accumulate.
    """
    h = np.asarray(context_mean, dtype=np.float64)
    grad_h = (_sigmoid(float(h @ word_out[target])) - 1.0) * word_out[target]
    grad_rows: dict[int, np.ndarray] = {
        target: (_sigmoid(float(h @ word_out[target])) - 1.0) * h,
    }
    for n in negatives:
        s = _sigmoid(float(h @ word_out[n]))
        grad_h = grad_h + s * word_out[n]
        grad_rows[n] = grad_rows.get(n, 0.0) + s * h
    return grad_h, grad_rows


def exact_softmax_probs(context_mean: np.ndarray, word_out: np.ndarray) -> np.ndarray:
    """Full-vocabulary softmax over output logits (verification path)."""
    logits = word_out @ np.asarray(context_mean, dtype=word_out.dtype)
    logits = logits - logits.max()
    e = np.exp(logits.astype(np.float64))
    return e / e.sum()


def train_doc2vec(docs: Sequence[TokenizedDocument], config: TrainConfig,
                  vocab: Vocabulary,
                  prob_sum_hook: Optional[list] = None) -> Doc2VecModel:
    """Train PV-DM paragraph and word vectors over the corpus.

    Deterministic for a fixed seed with workers=1 (the only mode implemented;
    the workers field is accepted for config compatibility). When
    negative_k=0 the exact softmax is used (requires V <= 2000); if
    prob_sum_hook is a list, the softmax normalization sum of every training
    step is appended to it.
    """
    if not docs:
        raise CorpusError("cannot train doc2vec on an empty corpus")
    if config.negative_k == 0 and vocab.size > _EXACT_SOFTMAX_MAX_V:
        raise ValueError(
            f"exact softmax (negative_k=0) requires V <= {_EXACT_SOFTMAX_MAX_V}")

    dim = config.dim
    rng = np.random.default_rng(config.seed)
    word_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(vocab.size, dim)) \
        .astype(np.float32)
    doc_vecs = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(docs), dim)) \
        .astype(np.float32)
    word_out = np.zeros((vocab.size, dim), dtype=np.float32)

    doc_tokens = []
    for d in docs:
        idx = np.array([vocab.index_of(t) for t in d.tokens if t in vocab],
                       dtype=np.int64)
        if len(idx) < 1:
            logger.warning("document %r has no in-vocabulary tokens; skipped", d.id)
        doc_tokens.append(idx)

    noise_cdf = _noise_cdf(vocab)
    total_steps = max(1, config.epochs * sum(len(t) for t in doc_tokens))
    lr_span = config.lr_start - config.lr_end
    window, neg_k = config.window, config.negative_k
    step = 0
    epoch_losses: list[float] = []

    for _ in range(config.epochs):
        epoch_loss = 0.0
        epoch_tokens = 0
        for d, tokens in enumerate(doc_tokens):
            T = len(tokens)
            if T < 1:
                continue
            # pre-draw this document's negatives in one block
            if neg_k > 0:
                negs_block = np.searchsorted(
                    noise_cdf, rng.random(size=(T, neg_k)))
            pvec = doc_vecs[d]
            for i in range(T):
                lr = config.lr_start - lr_span * (step / total_steps)
                step += 1
                lo, hi = max(0, i - window), min(T, i + window + 1)
                ctx = np.concatenate((tokens[lo:i], tokens[i + 1:hi]))
                m = len(ctx) + 1
                h = (word_in[ctx].sum(axis=0) + pvec) / m
                target = tokens[i]

                if neg_k == 0:
                    probs = exact_softmax_probs(h, word_out)
                    if prob_sum_hook is not None:
                        prob_sum_hook.append(float(probs.sum()))
                    epoch_loss += -np.log(max(probs[target], 1e-300))
                    grad_logits = probs.astype(np.float32)
                    grad_logits[target] -= 1.0
                    grad_h = grad_logits @ word_out
                    word_out -= lr * np.outer(grad_logits, h)
                else:
                    negs = negs_block[i]
                    negs = negs[negs != target]
                    v_pos = word_out[target]
                    s_pos = _sigmoid(float(h @ v_pos))
                    s_neg = _sigmoid(word_out[negs] @ h)
                    epoch_loss += -np.log(max(s_pos, 1e-300)) \
                        - float(np.sum(np.log(np.maximum(1.0 - s_neg, 1e-300))))
                    grad_h = (s_pos - 1.0) * v_pos + s_neg @ word_out[negs]
                    word_out[target] = v_pos - lr * (s_pos - 1.0) * h
                    np.subtract.at(word_out, negs,
                                   lr * s_neg[:, None] * h[None, :])

                delta = (lr / m) * grad_h
                word_in[ctx] -= delta
                pvec -= delta
                epoch_tokens += 1
        epoch_losses.append(epoch_loss / max(1, epoch_tokens))

    if not (np.isfinite(word_in).all() and np.isfinite(word_out).all()
            and np.isfinite(doc_vecs).all()):
        raise FloatingPointError("non-finite parameters after training")

    return Doc2VecModel(dim=dim, window=window, word_in=word_in,
                        word_out=word_out, doc_vecs=doc_vecs, vocab=vocab,
                        doc_ids=[d.id for d in docs], seed=config.seed,
                        noise_cdf=noise_cdf, epoch_losses=epoch_losses)


def infer_doc_vector(model: Doc2VecModel, tokens: Sequence[str], steps: int = 50,
                     lr_start: float = 0.025, seed: int = 0) -> np.ndarray:
    """Infer a paragraph vector for unseen text with word parameters frozen.

    Gradient-descends a fresh seeded vector through `steps` passes of the
    PV-DM update; the model itself is never mutated.
    """
    idx = np.array([model.vocab.index_of(t) for t in tokens if t in model.vocab],
                   dtype=np.int64)
    if len(idx) == 0:
        raise CorpusError("cannot infer a vector: no in-vocabulary tokens")

    rng = np.random.default_rng(seed)
    dim = model.dim
    pvec = rng.uniform(-0.5 / dim, 0.5 / dim, size=dim).astype(np.float32)
    if steps == 0:
        return pvec
    word_in, word_out, window = model.word_in, model.word_out, model.window
    noise_cdf = model.noise_cdf
    T = len(idx)
    total_steps = steps * T
    lr_end = 0.0001
    lr_span = max(0.0, lr_start - lr_end)
    neg_k = 5
    step = 0
    for _ in range(steps):
        negs_block = np.searchsorted(noise_cdf, rng.random(size=(T, neg_k)))
        for i in range(T):
            lr = lr_start - lr_span * (step / total_steps)
            step += 1
            lo, hi = max(0, i - window), min(T, i + window + 1)
            ctx = np.concatenate((idx[lo:i], idx[i + 1:hi]))
            m = len(ctx) + 1
            h = (word_in[ctx].sum(axis=0) + pvec) / m
            target = idx[i]
            negs = negs_block[i]
            negs = negs[negs != target]
            s_pos = _sigmoid(float(h @ word_out[target]))
            s_neg = _sigmoid(word_out[negs] @ h)
            grad_h = (s_pos - 1.0) * word_out[target] + s_neg @ word_out[negs]
            pvec -= (lr / m) * grad_h
    return pvec


def save_doc2vec(model: Doc2VecModel, fh: BinaryIO) -> None:
    """Header, vocabulary block, float32 LE matrices, doc-id table."""
    fh.write(f"dim={model.dim} V={model.vocab.size} D={len(model.doc_ids)} "
             f"window={model.window} seed={model.seed}\n".encode())
    for token in model.vocab.index_to_token:
        fh.write(f"{token}\t{model.vocab.frequency[token]}\n".encode())
    for mat in (model.word_in, model.word_out, model.doc_vecs):
        fh.write(mat.astype("<f4").tobytes(order="C"))
    for i, doc_id in enumerate(model.doc_ids):
        fh.write(f"{doc_id}\t{i}\n".encode())


def load_doc2vec(fh: BinaryIO) -> Doc2VecModel:
    fields = dict(kv.split("=") for kv in fh.readline().decode().split())
    dim, V, D = int(fields["dim"]), int(fields["V"]), int(fields["D"])
    tokens, freq = [], {}
    for _ in range(V):
        tok, count = fh.readline().decode().rstrip("\n").split("\t")
        tokens.append(tok)
        freq[tok] = int(count)
    vocab = Vocabulary(token_to_index={t: i for i, t in enumerate(tokens)},
                       index_to_token=tokens, frequency=freq, min_count=1)
    mats = []
    for rows in (V, V, D):
        buf = fh.read(rows * dim * 4)
        mats.append(np.frombuffer(buf, dtype="<f4").reshape(rows, dim).copy())
    doc_ids = [""] * D
    for _ in range(D):
        doc_id, row = fh.readline().decode().rstrip("\n").split("\t")
        doc_ids[int(row)] = doc_id
    return Doc2VecModel(dim=dim, window=int(fields["window"]), word_in=mats[0],
                        word_out=mats[1], doc_vecs=mats[2], vocab=vocab,
                        doc_ids=doc_ids, seed=int(fields["seed"]))
