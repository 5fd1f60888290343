"""Corpus loading, tokenization and vocabulary construction."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

logger = logging.getLogger(__name__)

# Small fixed stopword list; adequate for job-posting text.
STOPWORDS = frozenset("""
a an and are as at be been but by for from has have if in into is it its of on
or our that the their them then there these they this to was we were will with
you your
""".split())

_KNOWN_FIELDS = {
    "id", "title", "body", "classification", "location",
    "requirements", "skills", "warm",
}

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


class CorpusError(ValueError):
    """Raised for unreadable or malformed corpus input."""


@dataclass
class Document:
    """One item: text plus contextual metadata and warm/cold status."""

    id: str
    body: str
    title: str = ""
    classification: Optional[str] = None
    location: Optional[str] = None
    requirements: Optional[str] = None
    skills: Optional[list[str]] = None
    warm: bool = False

    def __post_init__(self):
        if not self.id:
            raise CorpusError("document id must be a nonempty string")
        if not self.body:
            raise CorpusError(f"document {self.id!r}: body must be nonempty")


@dataclass
class TokenizedDocument:
    id: str
    tokens: list[str]


@dataclass
class Vocabulary:
    """Dense token index ordered by descending frequency, ties lexicographic."""

    token_to_index: dict[str, int]
    index_to_token: list[str]
    frequency: dict[str, int]
    min_count: int

    @property
    def size(self) -> int:
        return len(self.index_to_token)

    def __len__(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def index_of(self, token: str) -> int:
        return self.token_to_index[token]

    def token_of(self, index: int) -> str:
        return self.index_to_token[index]


def tokenize(text: str, stopwords: Optional[frozenset[str]] = None) -> list[str]:
    """Lowercase, split on non-alphanumeric runs, drop tokens shorter than 2.

    Pass ``STOPWORDS`` (or any set) to also drop stopwords; default keeps them.
    """
    tokens = [t for t in _TOKEN_SPLIT.split(text.lower()) if len(t) >= 2]
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return tokens


def tokenize_documents(
    docs: Iterable[Document],
    stopwords: Optional[frozenset[str]] = None,
) -> list[TokenizedDocument]:
    return [TokenizedDocument(d.id, tokenize(d.body, stopwords)) for d in docs]


def load_corpus(path) -> list[Document]:
    """Read a JSONL corpus, one document object per line.

    Unknown fields are ignored with a warning; ``warm`` defaults to false.
    Raises CorpusError on malformed lines (with line number), duplicate ids,
    or missing id/body.
    """
    docs: list[Document] = []
    seen: set[str] = set()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            if not isinstance(raw, dict):
                raise CorpusError(f"{path}:{lineno}: expected an object")
            unknown = set(raw) - _KNOWN_FIELDS
            if unknown:
                logger.warning("%s:%d: ignoring unknown fields %s",
                               path, lineno, sorted(unknown))
            if not raw.get("id"):
                raise CorpusError(f"{path}:{lineno}: missing id")
            if not raw.get("body"):
                raise CorpusError(f"{path}:{lineno}: missing body")
            if raw["id"] in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate id {raw['id']!r}")
            seen.add(raw["id"])
            docs.append(Document(
                id=raw["id"],
                body=raw["body"],
                title=raw.get("title", ""),
                classification=raw.get("classification"),
                location=raw.get("location"),
                requirements=raw.get("requirements"),
                skills=raw.get("skills"),
                warm=bool(raw.get("warm", False)),
            ))
    return docs


def build_vocabulary(docs: Sequence[TokenizedDocument], min_count: int = 1) -> Vocabulary:
    """Retain tokens with corpus frequency >= min_count.

    Index order is descending frequency, ties broken lexicographically.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if not docs:
        raise CorpusError("cannot build vocabulary from an empty corpus")
    counts = Counter()
    for d in docs:
        counts.update(d.tokens)
    kept = {t: c for t, c in counts.items() if c >= min_count}
    if not kept:
        raise CorpusError("vocabulary is empty after min_count filtering")
    ordered = sorted(kept, key=lambda t: (-kept[t], t))
    return Vocabulary(
        token_to_index={t: i for i, t in enumerate(ordered)},
        index_to_token=ordered,
        frequency=kept,
        min_count=min_count,
    )
