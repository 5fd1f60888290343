"""Contextual feature enrichment: repeat distinguishing fields in the body."""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field

from .corpus import Document

# Fixed injection order keeps enrichment reproducible.
FIELD_ORDER = ("title", "classification", "location", "requirements", "skills")

_HEADING = re.compile(
    r"(?:^|(?<=[.!?:])\s|\n)\s*([A-Za-z][A-Za-z /&-]{0,40}):", re.MULTILINE)
_WANTED = re.compile(r"^(requirements|qualifications|skills)$", re.IGNORECASE)


@dataclass
class EnrichmentConfig:
    n_repeats: int = 3
    fields_to_inject: tuple[str, ...] = FIELD_ORDER

    def __post_init__(self):
        if self.n_repeats < 0:
            raise ValueError("n_repeats must be >= 0")
        bad = set(self.fields_to_inject) - set(FIELD_ORDER)
        if bad:
            raise ValueError(f"unknown enrichment fields: {sorted(bad)}")


def _field_text(doc: Document, name: str) -> str:
    value = getattr(doc, name)
    if value is None:
        return ""
    if name == "skills":
        return " ".join(value)
    return value


def enrich(doc: Document, config: EnrichmentConfig) -> Document:
    """Return a copy whose body has each selected field appended n_repeats times.

    Missing/empty fields are skipped; the input document is left unmodified.
    """
    parts = [doc.body]
    selected = set(config.fields_to_inject)
    for name in FIELD_ORDER:
        if name not in selected:
            continue
        text = _field_text(doc, name)
        if not text:
            continue
        parts.extend([text] * config.n_repeats)
    return dataclasses.replace(doc, body=" ".join(parts))


def extract_requirements(body: str) -> str:
    """Heuristic stand-in for a full NLP parser.

    Returns the text between a requirements/qualifications/skills heading
    and the next heading (or end of text); empty string when none matches.
    """
    headings = [(m.start(1), m.end(), m.group(1)) for m in _HEADING.finditer(body)]
    for idx, (_, end, label) in enumerate(headings):
        if _WANTED.match(label.strip()):
            stop = headings[idx + 1][0] if idx + 1 < len(headings) else len(body)
            return body[end:stop].strip()
    return ""
