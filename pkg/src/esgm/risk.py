"""Annual risk measures from daily closing prices.

For each asset and calendar year the daily log returns give three numbers:
the empirical 95% Value-at-Risk (a lower quantile, negative by convention),
the volatility (sample standard deviation, not annualized) and their
product, the *vv risk*.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import PriceDomainError
from .panel import MIN_RETURNS, PriceHistory

logger = logging.getLogger(__name__)

RISK_MEASURES = ("var95", "vol", "vv")


@dataclass
class ReturnSeries:
    year: int
    returns: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


@dataclass(frozen=True)
class RiskRow:
    var95: float
    vol: float
    vv: float


@dataclass
class RiskTable:
    """Risk measures keyed by ``(asset_id, year)``."""

    rows: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __contains__(self, key):
        return key in self.rows

    def get(self, asset_id: str, year: int) -> RiskRow:
        return self.rows[(asset_id, year)]

    def column(self, asset_ids, year: int, measure: str) -> np.ndarray:
        """Values of one measure (``var95``, ``vol`` or ``vv``) for ``asset_ids``."""
        return np.array([getattr(self.rows[(a, year)], measure) for a in asset_ids])


def returns_from_closes(closes) -> np.ndarray:
    """Log returns ``ln(p_d) - ln(p_{d-1})`` of consecutive observations."""
    closes = np.asarray(closes, dtype=float)
    if np.any(closes <= 0):
        raise PriceDomainError("log returns need strictly positive prices")
    return np.diff(np.log(closes))


def log_returns(prices: PriceHistory, year: int, min_returns: int = MIN_RETURNS) -> ReturnSeries:
    """Daily log returns inside ``year`` for every asset.

    Only consecutive in-year observations are differenced, so the first return
    of a year starts at its first trading day. Assets with fewer than
    ``min_returns`` returns are left out and a warning is recorded.
    """
    out = ReturnSeries(year=year)
    for asset_id in prices.asset_ids():
        closes = prices[asset_id].in_year(year).close
        if np.any(closes <= 0):
            raise PriceDomainError(f"asset {asset_id!r}: non-positive price in {year}")
        r = returns_from_closes(closes) if len(closes) >= 2 else np.empty(0)
        if len(r) < min_returns:
            msg = f"asset={asset_id} year={year}: {len(r)} returns < {min_returns}, omitted"
            logger.warning(msg)
            out.warnings.append(msg)
            continue
        out.returns[asset_id] = r
    return out


def empirical_var(returns, level: float = 0.95) -> float:
    """Lower ``(1 - level)`` quantile by the inverse-ECDF rule.

    Sorts the returns and picks the order statistic ``x_(k)`` with
    ``k = ceil((1 - level) * n)`` (1-indexed), clipped to at least 1.
    """
    x = np.sort(np.asarray(returns, dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empirical_var needs at least one return")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    # (1 - 0.95) * 20 evaluates to 1.0000000000000009; absorb the rounding
    k = max(1, math.ceil(round((1.0 - level) * n, 9)))
    return float(x[k - 1])


def volatility(returns) -> float:
    """Sample standard deviation (``ddof=1``) of daily log returns."""
    r = np.asarray(returns, dtype=float)
    if len(r) < 2:
        raise ValueError("volatility needs at least two returns")
    return float(np.std(r, ddof=1))


def vv_risk(var95: float, vol: float) -> float:
    if vol < 0:
        raise ValueError(f"volatility must be non-negative, got {vol}")
    return var95 * vol


def build_risk_table(
    prices: PriceHistory,
    years: Iterable[int],
    min_returns: int = MIN_RETURNS,
    level: float = 0.95,
) -> RiskTable:
    table = RiskTable()
    for year in years:
        series = log_returns(prices, year, min_returns=min_returns)
        table.warnings.extend(series.warnings)
        for asset_id, r in series.returns.items():
            var95 = empirical_var(r, level)
            vol = volatility(r)
            table.rows[(asset_id, year)] = RiskRow(var95, vol, vv_risk(var95, vol))
    return table


def write_risk_table(table: RiskTable, path) -> Path:
    """Export ``asset_id,year,var95,vol,vv`` with 10 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["asset_id", "year", "var95", "vol", "vv"])
        for (asset_id, year) in sorted(table.rows):
            row = table.rows[(asset_id, year)]
            writer.writerow([asset_id, year, f"{row.var95:.10g}", f"{row.vol:.10g}",
                             f"{row.vv:.10g}"])
    return path


def read_risk_table(path) -> RiskTable:
    table = RiskTable()
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            table.rows[(row["asset_id"], int(row["year"]))] = RiskRow(
                float(row["var95"]), float(row["vol"]), float(row["vv"])
            )
    return table
