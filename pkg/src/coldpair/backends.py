"""Uniform fit/embed interface over the three embedding backends."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import doc2vec as d2v
from . import lda as lda_mod
from . import tfidf as tfidf_mod
from .corpus import (STOPWORDS, Document, TokenizedDocument, Vocabulary,
                     build_vocabulary, tokenize)
from .enrichment import EnrichmentConfig, enrich
from .matcher import SimilarityIndex

BACKEND_NAMES = ("tfidf", "lda", "doc2vec")
CONTEXT_SUFFIX = "+context"


def parse_backend_name(name: str) -> tuple[str, bool]:
    """Split e.g. "doc2vec+context" into ("doc2vec", True)."""
    enriched = name.endswith(CONTEXT_SUFFIX)
    base = name[: -len(CONTEXT_SUFFIX)] if enriched else name
    if base not in BACKEND_NAMES:
        raise ValueError(f"unknown backend {name!r}")
    return base, enriched


@dataclass
class BackendConfig:
    name: str = "doc2vec"  # may carry a "+context" suffix
    seed: int = 0
    min_count: Optional[int] = None  # default: 1 for tfidf, 5 otherwise
    use_stopwords: bool = True
    enrichment: EnrichmentConfig = field(default_factory=EnrichmentConfig)
    # lda
    n_topics: int = 10
    sweeps: int = 100
    fold_in_sweeps: int = 50
    alpha: Optional[float] = None
    beta: float = 0.01
    # doc2vec
    train: d2v.TrainConfig = field(default_factory=d2v.TrainConfig)
    infer_steps: int = 50

    @property
    def base(self) -> str:
        return parse_backend_name(self.name)[0]

    @property
    def enriched(self) -> bool:
        return parse_backend_name(self.name)[1]


class Embedder:
    """Fits one backend over a document set and maps documents to vectors."""

    def __init__(self, config: BackendConfig, model=None,
                 vocab: Optional[Vocabulary] = None):
        self.config = config
        self.vocab = vocab
        self.model = model
        if model is not None and vocab is None:
            self.vocab = getattr(model, "vocab", None)

    @property
    def kind(self) -> str:
        return self.config.base

    def _prepare(self, doc: Document) -> TokenizedDocument:
        cfg = self.config
        if cfg.enriched:
            doc = enrich(doc, cfg.enrichment)
        stop = STOPWORDS if cfg.use_stopwords else None
        return TokenizedDocument(doc.id, tokenize(doc.body, stop))

    def fit(self, docs: Sequence[Document]) -> "Embedder":
        cfg = self.config
        tokenized = [self._prepare(d) for d in docs]
        min_count = cfg.min_count
        if min_count is None:
            min_count = 1 if cfg.base == "tfidf" else 5
        self.vocab = build_vocabulary(tokenized, min_count=min_count)
        if cfg.base == "tfidf":
            self.model = tfidf_mod.fit_tfidf(tokenized, self.vocab)
        elif cfg.base == "lda":
            self.model = lda_mod.fit_lda(
                tokenized, n_topics=cfg.n_topics, sweeps=cfg.sweeps,
                alpha=cfg.alpha, beta=cfg.beta, seed=cfg.seed,
                vocab=self.vocab)
        else:
            train_cfg = dataclasses.replace(cfg.train, seed=cfg.seed)
            self.model = d2v.train_doc2vec(tokenized, train_cfg, self.vocab)
        return self

    def vector(self, doc: Document):
        """Embed one document; doc2vec falls back to gradient-descent
        inference for documents not seen at training time."""
        if self.model is None:
            raise RuntimeError("embedder is not fitted")
        tokenized = self._prepare(doc)
        cfg = self.config
        if cfg.base == "tfidf":
            return tfidf_mod.transform_tfidf(self.model, tokenized)
        if cfg.base == "lda":
            return lda_mod.lda_doc_vector(self.model, tokenized,
                                          fold_in_sweeps=cfg.fold_in_sweeps,
                                          seed=cfg.seed)
        if doc.id in self.model:
            return self.model.doc_vector(doc.id)
        return d2v.infer_doc_vector(self.model, tokenized.tokens,
                                    steps=cfg.infer_steps, seed=cfg.seed)

    def build_index(self, docs: Sequence[Document]) -> SimilarityIndex:
        index = SimilarityIndex(self.kind,
                                dim=self.vocab.size if self.kind == "tfidf" else None)
        for doc in docs:
            index.add(doc.id, self.vector(doc))
        return index
