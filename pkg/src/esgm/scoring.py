"""Zero counts, the missing-information (M-) pillar, ESG/ESGM scores and classes."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .panel import CATEGORIES, AssetPanel, AssetRecord

WEIGHT_TOL = 1e-8

# Financials pillar weights of the provider, the only table shipped.
FINANCIALS_PROVIDER_WEIGHTS = (0.140, 0.394, 0.466)

ESGM_CLASSES = ("A", "B", "C", "D", "Unrated")
PROVIDER_CLASSES = ("A", "B", "C", "D")


@dataclass(frozen=True)
class WeightVector:
    """Non-negative E/S/G/M pillar weights summing to one."""

    w_e: float
    w_s: float
    w_g: float
    w_m: float

    def __post_init__(self):
        w = self.as_tuple()
        if any(not math.isfinite(v) or v < 0.0 or v > 1.0 for v in w):
            raise ValueError(f"weights must lie in [0, 1]: {w}")
        if abs(sum(w) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got {sum(w)!r}")

    def as_tuple(self) -> tuple:
        return (self.w_e, self.w_s, self.w_g, self.w_m)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())

    @classmethod
    def from_sequence(cls, w) -> "WeightVector":
        return cls(*(float(v) for v in w))


def zero_count(record: AssetRecord) -> int:
    """Number of category scores exactly equal to 0.0 (missing disclosures)."""
    values = [record.categories[c] for c in CATEGORIES]
    if any(v is None for v in values):
        raise ValueError(f"{record.asset_id}/{record.year}: absent category score")
    return sum(1 for v in values if v == 0.0)


def zero_counts(panel: AssetPanel, year: int, sector: str) -> dict:
    return {r.asset_id: zero_count(r) for r in panel.select(year, sector)}


def m_pillar(zero_counts: Mapping[str, int]) -> dict:
    """Percentile-rank the zero counts of one sector-year.

    For asset ``p``, ``l`` is the number of assets with a strictly smaller
    zero count and ``e`` the number with the same count (``p`` included);
    the score is ``100 * (l + e / 2) / n``. More missing data gives a higher
    score, and the scores of a sector-year always average 50.
    """
    if not zero_counts:
        raise ValueError("m_pillar needs at least one asset")
    ids = list(zero_counts)
    c = np.array([zero_counts[a] for a in ids])
    n = len(c)
    lower = (c[None, :] < c[:, None]).sum(axis=1)
    equal = (c[None, :] == c[:, None]).sum(axis=1)
    scores = 100.0 * (lower + equal / 2.0) / n
    return {a: float(s) for a, s in zip(ids, scores)}


def m_pillar_table(panel: AssetPanel, years=None) -> dict:
    """M-pillar scores keyed by ``(sector, year)`` then asset id."""
    years = panel.years if years is None else years
    table = {}
    for year in years:
        for sector in panel.sectors:
            counts = zero_counts(panel, year, sector)
            if counts:
                table[(sector, year)] = m_pillar(counts)
    return table


def provider_esg_score(e: float, s: float, g: float, weights) -> float:
    """Provider-style ESG score: weighted sum of the three pillars."""
    w_e, w_s, w_g = (float(v) for v in weights)
    if min(w_e, w_s, w_g) < 0 or abs(w_e + w_s + w_g - 1.0) > WEIGHT_TOL:
        raise ValueError(f"pillar weights must be non-negative and sum to 1: {weights}")
    return w_e * e + w_s * s + w_g * g


def esgm_score(e: float, s: float, g: float, m: float, w: WeightVector) -> float:
    return e * w.w_e + s * w.w_s + g * w.w_g + m * w.w_m


def esgm_scores(pillars: np.ndarray, w: WeightVector) -> np.ndarray:
    """Vectorized :func:`esgm_score` over an ``(n, 4)`` E/S/G/M array.

    The summation order matches the scalar version bit for bit.
    """
    p = np.asarray(pillars, dtype=float)
    return p[:, 0] * w.w_e + p[:, 1] * w.w_s + p[:, 2] * w.w_g + p[:, 3] * w.w_m


def _check_score(score: float):
    if not (0.0 <= score <= 100.0):
        raise ValueError(f"score must lie in [0, 100], got {score}")


def assign_esgm_class(score: float) -> str:
    """A: (70, 100], B: (60, 70], C: (50, 60], D: (40, 50], Unrated: [0, 40]."""
    _check_score(score)
    if score > 70:
        return "A"
    if score > 60:
        return "B"
    if score > 50:
        return "C"
    if score > 40:
        return "D"
    return "Unrated"


def assign_provider_class(score: float) -> str:
    """A above 75, B in (50, 75], C in [25, 50], D below 25."""
    _check_score(score)
    if score > 75:
        return "A"
    if score > 50:
        return "B"
    if score >= 25:
        return "C"
    return "D"


SCORE_COLUMNS = ("asset_id", "sector", "year", "m_pillar", "esgm", "esgm_class", "provider_class")


def write_scores(rows, path) -> Path:
    """Write ``scores.csv``; ``esgm`` may be ``None`` for unscored sectors."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for r in rows:
            esgm = "" if r["esgm"] is None else f"{r['esgm']:.6f}"
            writer.writerow([r["asset_id"], r["sector"], r["year"], f"{r['m_pillar']:.6f}",
                             esgm, r["esgm_class"] or "", r["provider_class"]])
    return path
