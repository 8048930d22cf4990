"""
Asset panel and price history ingestion.

Reads the two CSV inputs (``assets.csv`` and ``prices.csv``) into immutable
in-memory structures, carries scores forward for assets that have not been
updated yet, and reports which assets lack the coverage needed downstream.

Layout of ``assets.csv`` (header is exact, lowercase)::

    asset_id,sector,year,ru,em,ei,wf,hr,co,pr,mg,sh,cs,e_pillar,s_pillar,g_pillar,esg

An empty cell means "absent" and makes the record eligible for imputation.

Layout of ``prices.csv``::

    asset_id,date,close
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import DuplicateError, RangeError, SchemaError

logger = logging.getLogger(__name__)

CATEGORIES = ("ru", "em", "ei", "wf", "hr", "co", "pr", "mg", "sh", "cs")
PILLARS = ("e_pillar", "s_pillar", "g_pillar")
ASSET_COLUMNS = ("asset_id", "sector", "year") + CATEGORIES + PILLARS + ("esg",)
PRICE_COLUMNS = ("asset_id", "date", "close")

MIN_RETURNS = 30


@dataclass(frozen=True)
class AssetRecord:
    """ESG data of one asset in one year.

    Score fields are ``None`` when the provider did not report them.
    """

    asset_id: str
    sector: str
    year: int
    categories: dict
    e_pillar: Optional[float]
    s_pillar: Optional[float]
    g_pillar: Optional[float]
    provider_esg: Optional[float] = None

    def __post_init__(self):
        if set(self.categories) != set(CATEGORIES):
            raise SchemaError(
                f"{self.asset_id}/{self.year}: category keys must be {CATEGORIES}"
            )
        for name, value in self._scores():
            if value is not None and not (0.0 <= value <= 100.0):
                raise RangeError(
                    f"{self.asset_id}/{self.year}: {name}={value} outside [0, 100]",
                    column=name,
                )

    def _scores(self):
        for key in CATEGORIES:
            yield key, self.categories[key]
        yield "e_pillar", self.e_pillar
        yield "s_pillar", self.s_pillar
        yield "g_pillar", self.g_pillar
        yield "esg", self.provider_esg

    @property
    def is_complete(self) -> bool:
        return all(value is not None for _, value in self._scores())

    def missing_fields(self) -> list[str]:
        return [name for name, value in self._scores() if value is None]


@dataclass(frozen=True)
class AssetPanel:
    """All asset-year records, canonically ordered by (asset_id, year)."""

    records: tuple
    sectors: tuple = ()
    years: tuple = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: (r.asset_id, r.year)))
        seen = set()
        for rec in records:
            key = (rec.asset_id, rec.year)
            if key in seen:
                raise DuplicateError(f"duplicate record for asset {rec.asset_id!r} in {rec.year}")
            seen.add(key)
        sectors = tuple(sorted(set(self.sectors) | {r.sector for r in records}))
        record_years = {r.year for r in records} | set(self.years)
        years = tuple(range(min(record_years), max(record_years) + 1)) if record_years else ()
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "sectors", sectors)
        object.__setattr__(self, "years", years)
        object.__setattr__(self, "_index", {(r.asset_id, r.year): r for r in records})

    def __len__(self):
        return len(self.records)

    def get(self, asset_id: str, year: int) -> Optional[AssetRecord]:
        return self._index.get((asset_id, year))

    def asset_ids(self) -> list[str]:
        return sorted({r.asset_id for r in self.records})

    def select(self, year: int, sector: Optional[str] = None) -> list[AssetRecord]:
        """Records of one year (optionally one sector), ordered by asset id."""
        return [
            r for r in self.records
            if r.year == year and (sector is None or r.sector == sector)
        ]

    def without_assets(self, asset_ids: Iterable[str]) -> "AssetPanel":
        drop = set(asset_ids)
        return AssetPanel(tuple(r for r in self.records if r.asset_id not in drop))


@dataclass(frozen=True)
class PriceSeries:
    dates: np.ndarray  # datetime64[D], strictly increasing
    close: np.ndarray

    def in_year(self, year: int) -> "PriceSeries":
        years = self.dates.astype("datetime64[Y]").astype(int) + 1970
        mask = years == year
        return PriceSeries(self.dates[mask], self.close[mask])

    def __len__(self):
        return len(self.close)


@dataclass(frozen=True)
class PriceHistory:
    series: dict = field(default_factory=dict)

    def __contains__(self, asset_id):
        return asset_id in self.series

    def __getitem__(self, asset_id) -> PriceSeries:
        return self.series[asset_id]

    def asset_ids(self) -> list[str]:
        return sorted(self.series)

    @classmethod
    def from_arrays(cls, data: dict) -> "PriceHistory":
        """Build from ``{asset_id: (dates, closes)}``; dates may be strings."""
        series = {}
        for asset_id, (dates, closes) in data.items():
            d = np.asarray(dates, dtype="datetime64[D]")
            c = np.asarray(closes, dtype=float)
            order = np.argsort(d, kind="stable")
            d, c = d[order], c[order]
            if len(d) > 1 and np.any(d[1:] == d[:-1]):
                raise DuplicateError(f"duplicate price date for asset {asset_id!r}")
            series[asset_id] = PriceSeries(d, c)
        return cls(series)


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_panel`.

    ``errors`` is empty iff the panel is accepted. ``excluded`` lists assets
    that must be dropped before any sector ranking.
    """

    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    excluded: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return not self.errors


def _parse_score(text: str, column: str, row: int) -> Optional[float]:
    text = text.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"row {row}: column {column!r} is not numeric: {text!r}",
                          column=column, row=row) from None
    if not (0.0 <= value <= 100.0):  # also rejects NaN
        raise RangeError(f"row {row}: column {column!r} value {value} outside [0, 100]",
                         column=column, row=row)
    return value


def load_asset_panel(panel_path) -> AssetPanel:
    """Read ``assets.csv`` into an :class:`AssetPanel`.

    Raises:
        SchemaError: a required column is missing or a cell is malformed.
        RangeError: a score lies outside [0, 100]; the message cites the row.
        DuplicateError: an (asset_id, year) pair occurs twice.
    """
    path = Path(panel_path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: missing header")
        header = [h.strip() for h in header]
        for column in ASSET_COLUMNS:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}", column=column)
        index = {name: header.index(name) for name in ASSET_COLUMNS}

        records = []
        seen = {}
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise SchemaError(f"row {row_no}: expected {len(header)} cells, got {len(row)}",
                                  row=row_no)
            asset_id = row[index["asset_id"]].strip()
            sector = row[index["sector"]].strip()
            if not asset_id or not sector:
                raise SchemaError(f"row {row_no}: asset_id and sector are required", row=row_no)
            try:
                year = int(row[index["year"]].strip())
            except ValueError:
                raise SchemaError(f"row {row_no}: invalid year {row[index['year']]!r}",
                                  column="year", row=row_no) from None
            if (asset_id, year) in seen:
                raise DuplicateError(
                    f"row {row_no}: duplicate (asset_id, year) = ({asset_id!r}, {year}),"
                    f" first seen at row {seen[(asset_id, year)]}"
                )
            seen[(asset_id, year)] = row_no
            scores = {c: _parse_score(row[index[c]], c, row_no)
                      for c in CATEGORIES + PILLARS + ("esg",)}
            records.append(AssetRecord(
                asset_id=asset_id,
                sector=sector,
                year=year,
                categories={c: scores[c] for c in CATEGORIES},
                e_pillar=scores["e_pillar"],
                s_pillar=scores["s_pillar"],
                g_pillar=scores["g_pillar"],
                provider_esg=scores["esg"],
            ))
    logger.info("loaded %d asset records from %s", len(records), path)
    return AssetPanel(tuple(records))


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def write_asset_panel(panel: AssetPanel, path) -> Path:
    """Write the panel in the ``assets.csv`` layout; reloading is lossless."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ASSET_COLUMNS)
        for rec in panel.records:
            writer.writerow(
                [rec.asset_id, rec.sector, rec.year]
                + [_fmt(rec.categories[c]) for c in CATEGORIES]
                + [_fmt(rec.e_pillar), _fmt(rec.s_pillar), _fmt(rec.g_pillar),
                   _fmt(rec.provider_esg)]
            )
    return path


def load_prices(prices_path) -> PriceHistory:
    """Read ``prices.csv``. Positivity is checked by :func:`validate_panel`."""
    path = Path(prices_path)
    grouped: dict[str, tuple[list, list]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: missing header")
        header = [h.strip() for h in header]
        for column in PRICE_COLUMNS:
            if column not in header:
                raise SchemaError(f"{path}: missing column {column!r}", column=column)
        ia, idt, ic = (header.index(c) for c in PRICE_COLUMNS)
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                date = np.datetime64(row[idt].strip(), "D")
                close = float(row[ic])
            except ValueError:
                raise SchemaError(f"row {row_no}: malformed date or close", row=row_no) from None
            if not math.isfinite(close):
                raise SchemaError(f"row {row_no}: close is not finite", column="close", row=row_no)
            dates, closes = grouped.setdefault(row[ia].strip(), ([], []))
            dates.append(date)
            closes.append(close)
    return PriceHistory.from_arrays(grouped)


def write_prices(prices: PriceHistory, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PRICE_COLUMNS)
        for asset_id in prices.asset_ids():
            s = prices[asset_id]
            for d, c in zip(s.dates, s.close):
                writer.writerow([asset_id, str(d), repr(float(c))])
    return path


def impute_carry_forward(panel: AssetPanel, target_year: int, source_year: int):
    """Carry each asset's ``source_year`` record forward into ``target_year``.

    An asset is imputed when it has a record in the source year and either no
    record in the target year or an incomplete one. The whole record is copied
    (categories, pillars and ESG score) and stamped with the target year.

    Returns:
        ``(new_panel, count)`` where ``count`` is the number of imputed assets.
    """
    if source_year >= target_year:
        raise ValueError(f"source_year ({source_year}) must precede target_year ({target_year})")
    if panel.records and (source_year not in panel.years or target_year not in panel.years):
        raise ValueError(f"years {source_year}/{target_year} not covered by panel years {panel.years}")

    by_key = {(r.asset_id, r.year): r for r in panel.records}
    out = dict(by_key)
    count = 0
    for (asset_id, year), rec in by_key.items():
        if year != source_year:
            continue
        current = by_key.get((asset_id, target_year))
        if current is not None and current.is_complete:
            continue
        copy = replace(rec, year=target_year, categories=dict(rec.categories))
        if current == copy:
            continue
        out[(asset_id, target_year)] = copy
        count += 1
    if count:
        logger.info("imputed %d assets in %d from %d", count, target_year, source_year)
    return AssetPanel(tuple(out.values()), years=panel.years), count


def validate_panel(
    panel: AssetPanel,
    prices: PriceHistory,
    *,
    score_years: Optional[Iterable[int]] = None,
    risk_years: Optional[Iterable[int]] = None,
    min_returns: int = MIN_RETURNS,
    imputed: int = 0,
) -> ValidationReport:
    """Flag assets that cannot enter the analysis.

    An asset is excluded when it lacks a record (or a complete record) in any
    score year, has no price data, or has fewer than ``min_returns`` in-year
    returns in any risk year. Non-positive prices are errors.

    Args:
        score_years: years that need ESG data; defaults to ``panel.years``.
        risk_years: years that need price coverage; defaults to score years + 1.
    """
    score_years = list(panel.years if score_years is None else score_years)
    risk_years = [y + 1 for y in score_years] if risk_years is None else list(risk_years)
    report = ValidationReport()
    excluded = set()

    for asset_id in panel.asset_ids():
        for year in score_years:
            rec = panel.get(asset_id, year)
            loc = f"asset={asset_id} year={year}"
            if rec is None:
                report.warnings.append((loc, "no ESG record"))
                excluded.add(asset_id)
            elif not rec.is_complete:
                report.warnings.append((loc, "incomplete record: " + ",".join(rec.missing_fields())))
                excluded.add(asset_id)

        if asset_id not in prices or len(prices[asset_id]) == 0:
            report.warnings.append((f"asset={asset_id}", "no price data"))
            excluded.add(asset_id)
            continue
        series = prices[asset_id]
        bad = np.flatnonzero(series.close <= 0)
        if bad.size:
            report.errors.append(
                (f"asset={asset_id} date={series.dates[bad[0]]}", "non-positive price")
            )
            excluded.add(asset_id)
        for year in risk_years:
            n_obs = len(series.in_year(year))
            if n_obs - 1 < min_returns:
                report.warnings.append(
                    (f"asset={asset_id} year={year}",
                     f"insufficient price coverage ({max(n_obs - 1, 0)} returns < {min_returns})")
                )
                excluded.add(asset_id)

    report.excluded = sorted(excluded)
    dropped = sum(1 for r in panel.records if r.asset_id in excluded)
    report.counts = {
        "read": len(panel.records),
        "accepted": len(panel.records) - dropped,
        "imputed": imputed,
        "dropped": dropped,
    }
    for loc, note in report.warnings:
        logger.warning("%s: %s", loc, note)
    for loc, rule in report.errors:
        logger.error("%s: %s", loc, rule)
    return report


def apply_exclusions(panel: AssetPanel, report: ValidationReport) -> AssetPanel:
    """Drop every asset flagged by ``report``."""
    return panel.without_assets(report.excluded)
