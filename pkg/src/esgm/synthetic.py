"""Synthetic panels with a planted link between one pillar and next-year risk.

Category scores are zero-inflated draws; pillars are category means, so a
missing category drags its pillar down exactly like the provider's encoding
does. Daily returns in year ``t + 1`` are Gaussian with a volatility that
falls monotonically in a blend of the planted pillar (weight ``strength``)
and independent noise. With ``strength = 1`` the ranking of next-year risk
is a function of the planted pillar alone, up to sampling noise.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .panel import CATEGORIES, AssetPanel, AssetRecord, PriceHistory, PriceSeries, write_asset_panel, write_prices
from .scoring import FINANCIALS_PROVIDER_WEIGHTS, m_pillar

# Default probability that a category score is missing (encoded as 0);
# workforce, community, management and shareholders are never missing.
DEFAULT_ZERO_PROBS = {
    "ru": 0.10, "em": 0.10, "ei": 0.40, "wf": 0.0, "hr": 0.30,
    "co": 0.0, "pr": 0.02, "mg": 0.0, "sh": 0.0, "cs": 0.25,
}

# Ten sectors, 483 assets in total.
DEFAULT_SECTOR_SIZES = {
    "Basic Materials": 23,
    "Consumer Cyclicals": 77,
    "Consumer Non-Cyclicals": 39,
    "Energy": 24,
    "Financials": 60,
    "Healthcare": 56,
    "Industrials": 66,
    "Real Estate": 28,
    "Technology": 82,
    "Utilities": 28,
}

PILLAR_CATEGORIES = {
    "e": ("ru", "em", "ei"),
    "s": ("wf", "hr", "co", "pr"),
    "g": ("mg", "sh", "cs"),
}


@dataclass
class SyntheticSpec:
    sectors: dict = field(default_factory=lambda: dict(DEFAULT_SECTOR_SIZES))
    score_years: tuple = (2017, 2018, 2019)
    zero_probs: dict = field(default_factory=lambda: dict(DEFAULT_ZERO_PROBS))
    planted_pillar: str = "m"
    strength: float = 1.0
    seed: int = 0
    drop_last_year: float = 0.0  # share of assets without a record in the last score year
    vol_range: tuple = (0.008, 0.035)
    provider_weights: tuple = FINANCIALS_PROVIDER_WEIGHTS

    def validate(self):
        if not self.sectors:
            raise ConfigError("synthetic spec needs at least one sector")
        for name, size in self.sectors.items():
            if int(size) < 1:
                raise ConfigError(f"sector {name!r} has size {size}; sizes must be >= 1")
        if not self.score_years:
            raise ConfigError("synthetic spec needs at least one score year")
        years = sorted(self.score_years)
        if years != list(range(years[0], years[-1] + 1)):
            raise ConfigError("score years must be consecutive")
        if self.planted_pillar not in ("e", "s", "g", "m"):
            raise ConfigError("planted_pillar must be one of e, s, g, m")
        if not 0.0 <= self.strength <= 1.0:
            raise ConfigError("strength must lie in [0, 1]")
        if not 0.0 <= self.drop_last_year < 1.0:
            raise ConfigError("drop_last_year must lie in [0, 1)")
        if set(self.zero_probs) - set(CATEGORIES):
            raise ConfigError(f"unknown categories in zero_probs: {set(self.zero_probs) - set(CATEGORIES)}")
        if any(not 0.0 <= p < 1.0 for p in self.zero_probs.values()):
            raise ConfigError("zero probabilities must lie in [0, 1)")
        lo, hi = self.vol_range
        if not 0 < lo < hi:
            raise ConfigError("vol_range must satisfy 0 < low < high")

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticSpec":
        data = dict(data)
        if "score_years" in data:
            data["score_years"] = tuple(int(y) for y in data["score_years"])
        if "zero_probs" in data:
            data["zero_probs"] = {**DEFAULT_ZERO_PROBS, **data["zero_probs"]}
        for key in ("vol_range", "provider_weights"):
            if key in data:
                data[key] = tuple(data[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown synthetic spec keys: {sorted(unknown)}")
        return cls(**data)


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "", name)[:12] or "sector"


def _business_days(year: int) -> np.ndarray:
    days = np.arange(np.datetime64(f"{year}-01-01"), np.datetime64(f"{year + 1}-01-01"))
    return days[np.is_busday(days)]


def generate_synthetic_panel(spec: SyntheticSpec):
    """Draw an :class:`AssetPanel` and a matching :class:`PriceHistory`.

    Deterministic given ``spec.seed``. Prices cover every business day of the
    risk years (score years + 1).
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    years = sorted(spec.score_years)
    probs = np.array([spec.zero_probs.get(c, 0.0) for c in CATEGORIES])
    w_e, w_s, w_g = spec.provider_weights
    lo, hi = spec.vol_range

    records = []
    series = {}
    for sector, size in spec.sectors.items():
        size = int(size)
        ids = [f"{_slug(sector)}-{k:03d}" for k in range(size)]
        base = rng.uniform(5.0, 100.0, size=(size, len(CATEGORIES)))
        sector_scores = {}
        for year in years:
            drift = rng.normal(0.0, 5.0, size=base.shape)
            cats = np.round(np.clip(base + drift, 1.0, 100.0), 2)
            cats[rng.random(cats.shape) < probs] = 0.0
            pillars = {
                key: np.round(np.mean(cats[:, [CATEGORIES.index(c) for c in members]], axis=1), 2)
                for key, members in PILLAR_CATEGORIES.items()
            }
            esg = np.round(np.clip(w_e * pillars["e"] + w_s * pillars["s"] + w_g * pillars["g"],
                                   0.0, 100.0), 2)
            zeros = {a: int(np.sum(cats[k] == 0.0)) for k, a in enumerate(ids)}
            m = m_pillar(zeros)
            pillars["m"] = np.array([m[a] for a in ids])
            sector_scores[year] = pillars
            for k, a in enumerate(ids):
                records.append(AssetRecord(
                    asset_id=a, sector=sector, year=year,
                    categories={c: float(cats[k, i]) for i, c in enumerate(CATEGORIES)},
                    e_pillar=float(pillars["e"][k]), s_pillar=float(pillars["s"][k]),
                    g_pillar=float(pillars["g"][k]), provider_esg=float(esg[k]),
                ))

        # one continuous random walk per asset across all risk years
        start = rng.uniform(20.0, 200.0, size=size)
        paths = {a: ([], []) for a in ids}
        level = np.log(start)
        for year in years:
            planted = sector_scores[year][spec.planted_pillar] / 100.0
            q = spec.strength * planted + (1.0 - spec.strength) * rng.random(size)
            sigma = lo * (hi / lo) ** (1.0 - q)
            days = _business_days(year + 1)
            steps = rng.normal(0.0, 1.0, size=(size, len(days))) * sigma[:, None]
            logp = level[:, None] + np.cumsum(steps, axis=1)
            level = logp[:, -1]
            for k, a in enumerate(ids):
                paths[a][0].append(days)
                paths[a][1].append(np.exp(logp[k]))
        for a, (d, c) in paths.items():
            series[a] = PriceSeries(np.concatenate(d), np.concatenate(c))

    if spec.drop_last_year > 0:
        last = years[-1]
        if len(years) > 1:
            all_ids = sorted({r.asset_id for r in records})
            n_drop = int(round(spec.drop_last_year * len(all_ids)))
            dropped = set(rng.choice(all_ids, size=n_drop, replace=False).tolist())
            records = [r for r in records if not (r.year == last and r.asset_id in dropped)]

    return AssetPanel(tuple(records), years=tuple(years)), PriceHistory(series)


def write_synthetic(spec: SyntheticSpec, outdir, optimizer: dict = None) -> dict:
    """Write ``assets.csv``, ``prices.csv`` and a runnable ``config.json``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    panel, prices = generate_synthetic_panel(spec)
    assets_path = write_asset_panel(panel, outdir / "assets.csv")
    prices_path = write_prices(prices, outdir / "prices.csv")
    years = sorted(spec.score_years)
    config = {
        "assets": "assets.csv",
        "prices": "prices.csv",
        "score_years": years,
        "risk_years": [y + 1 for y in years],
        "risk_kinds": ["vvrisk", "var", "vol"],
        "imputations": [[years[-2], years[-1]]] if len(years) > 1 else [],
        "provider_weights": {s: list(spec.provider_weights) for s in spec.sectors},
        "optimizer": optimizer or {},
        "seed": spec.seed,
        "output_dir": "out",
    }
    config_path = outdir / "config.json"
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    spec_path = outdir / "spec.json"
    spec_path.write_text(json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n")
    return {"assets": assets_path, "prices": prices_path, "config": config_path, "spec": spec_path}
