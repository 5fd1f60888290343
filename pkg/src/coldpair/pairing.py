"""Pairing layer: inject paired cold items into CF recommendation lists."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cf import Recommendation
from .matcher import PairingTable

CF = "cf"
PAIRED = "paired"


@dataclass
class AugmentedRecommendation:
    user: str
    items: list[tuple[str, str]]  # (item id, provenance: "cf" | "paired")
    source: Recommendation

    def ids(self) -> list[str]:
        return [item for item, _ in self.items]


def invert_pairs(pairs: PairingTable) -> dict[str, list[str]]:
    """warm_id -> cold ids, ordered by descending score then ascending cold id."""
    edges: dict[str, list[tuple[float, str]]] = {}
    for cold_id, lst in pairs.pairs.items():
        for warm_id, score in lst:
            edges.setdefault(warm_id, []).append((score, cold_id))
    return {
        warm: [c for _, c in sorted(lst, key=lambda e: (-e[0], e[1]))]
        for warm, lst in edges.items()
    }


def augment(rec: Recommendation, pairs: PairingTable,
            max_len: int = 2 ** 31) -> AugmentedRecommendation:
    """Scan the CF list in order; after each warm item insert its paired cold
    items (best score first) that are not already present, capped at max_len.

    CF items are never displaced or dropped, so max_len must be >= len(rec).
    """
    if max_len < len(rec.items):
        raise ValueError("max_len must be >= the CF recommendation length")
    cold_by_warm = invert_pairs(pairs)
    out: list[tuple[str, str]] = []
    # every source item will be emitted, so anything in the source list
    # already counts as present for cold-item insertion
    present: set[str] = {item for item, _ in rec.items}
    for pos, (item, _) in enumerate(rec.items):
        out.append((item, CF))
        remaining_cf = len(rec.items) - pos - 1
        for cold_id in cold_by_warm.get(item, []):
            if cold_id in present:
                continue
            if len(out) + remaining_cf >= max_len:
                break
            out.append((cold_id, PAIRED))
            present.add(cold_id)
    return AugmentedRecommendation(user=rec.user, items=out, source=rec)
