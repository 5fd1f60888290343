"""Item-based collaborative filtering: rating matrix, item-item similarity,
neighborhoods, and top-n recommendation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, TextIO


class RatingsError(ValueError):
    """Raised for malformed rating data or unknown ids."""


@dataclass
class RatingMatrix:
    """Sparse user x item ratings, indexed both ways."""

    by_user: dict[str, dict[str, float]] = field(default_factory=dict)
    by_item: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def users(self) -> list[str]:
        return list(self.by_user)

    @property
    def items(self) -> list[str]:
        return list(self.by_item)

    def add(self, user: str, item: str, rating: float) -> None:
        if item in self.by_user.get(user, {}):
            raise RatingsError(f"duplicate rating for ({user!r}, {item!r})")
        self.by_user.setdefault(user, {})[item] = rating
        self.by_item.setdefault(item, {})[user] = rating


@dataclass
class Recommendation:
    user: str
    items: list[tuple[str, float]]  # (item id, aggregate score), descending


ItemNeighborhood = dict[str, list[tuple[str, float]]]


def load_ratings(path) -> RatingMatrix:
    """Parse a TSV of user_id, item_id, rating rows."""
    matrix = RatingMatrix()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise RatingsError(f"cannot read ratings file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise RatingsError(f"{path}:{lineno}: expected 3 tab-separated fields")
            user, item, rating = parts
            try:
                value = float(rating)
            except ValueError as exc:
                raise RatingsError(
                    f"{path}:{lineno}: non-numeric rating {rating!r}") from exc
            try:
                matrix.add(user, item, value)
            except RatingsError as exc:
                raise RatingsError(f"{path}:{lineno}: {exc}") from exc
    return matrix


def pearson_item(i: str, j: str, R: RatingMatrix) -> Optional[float]:
    """Pearson correlation over co-raters; item means are taken over ALL of
    each item's raters. Returns None when undefined (fewer than 2 co-raters
    or a zero-norm centered co-rating vector)."""
    if i not in R.by_item:
        raise RatingsError(f"unknown item {i!r}")
    if j not in R.by_item:
        raise RatingsError(f"unknown item {j!r}")
    ri, rj = R.by_item[i], R.by_item[j]
    co_raters = ri.keys() & rj.keys()
    if len(co_raters) < 2:
        return None
    mean_i = sum(ri.values()) / len(ri)
    mean_j = sum(rj.values()) / len(rj)
    num = sum((ri[w] - mean_i) * (rj[w] - mean_j) for w in co_raters)
    den_i = math.sqrt(sum((ri[w] - mean_i) ** 2 for w in co_raters))
    den_j = math.sqrt(sum((rj[w] - mean_j) ** 2 for w in co_raters))
    if den_i == 0.0 or den_j == 0.0:
        return None
    return num / (den_i * den_j)


def cosine_item(i: str, j: str, R: RatingMatrix) -> float:
    """Cosine of the full sparse rating columns (absent ratings are zero)."""
    if i not in R.by_item:
        raise RatingsError(f"unknown item {i!r}")
    if j not in R.by_item:
        raise RatingsError(f"unknown item {j!r}")
    ri, rj = R.by_item[i], R.by_item[j]
    norm_i = math.sqrt(sum(v * v for v in ri.values()))
    norm_j = math.sqrt(sum(v * v for v in rj.values()))
    if norm_i == 0.0 or norm_j == 0.0:
        raise RatingsError("cosine undefined for a zero-norm rating column")
    dot = sum(ri[w] * rj[w] for w in ri.keys() & rj.keys())
    return dot / (norm_i * norm_j)


def build_item_neighborhoods(R: RatingMatrix, metric: str = "cosine",
                             k: int = 20) -> ItemNeighborhood:
    """Top-k most similar other items per item; undefined pairs are skipped."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if metric not in ("pearson", "cosine"):
        raise ValueError(f"unknown metric {metric!r}")
    items = R.items
    nbrs: ItemNeighborhood = {i: [] for i in items}
    for a_pos, i in enumerate(items):
        scored = []
        for j in items:
            if j == i:
                continue
            if metric == "pearson":
                sim = pearson_item(i, j, R)
                if sim is None:
                    continue
            else:
                sim = cosine_item(i, j, R)
            scored.append((j, sim))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        nbrs[i] = scored[:k]
    return nbrs


def recommend(R: RatingMatrix, nbrs: ItemNeighborhood, user: str,
              n: int = 10) -> Recommendation:
    """score(candidate) = sum over the user's rated items i of
    sim(i, candidate) * r_ui, for unrated candidates found in the
    neighborhoods of rated items."""
    if user not in R.by_user:
        raise RatingsError(f"unknown user {user!r}")
    rated = R.by_user[user]
    scores: dict[str, float] = {}
    for item, rating in rated.items():
        for neighbor, sim in nbrs.get(item, []):
            if neighbor in rated:
                continue
            scores[neighbor] = scores.get(neighbor, 0.0) + sim * rating
    ranked = sorted(scores.items(), key=lambda pair: (-pair[1], pair[0]))
    return Recommendation(user=user, items=ranked[:n])


def save_neighborhoods(nbrs: ItemNeighborhood, fh: TextIO) -> None:
    for item, lst in nbrs.items():
        for neighbor, score in lst:
            fh.write(f"{item}\t{neighbor}\t{score:.10g}\n")


def load_neighborhoods(fh: TextIO) -> ItemNeighborhood:
    nbrs: ItemNeighborhood = {}
    for line in fh:
        line = line.rstrip("\n")
        if not line:
            continue
        item, neighbor, score = line.split("\t")
        nbrs.setdefault(item, []).append((neighbor, float(score)))
    return nbrs
