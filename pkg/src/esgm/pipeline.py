"""End-to-end run: ingest, impute, risk, M-pillar, optimize, test, rate, report."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import reports
from .errors import ConfigError, EsgmError, PipelineError, UndefinedTauError
from .optimizer import MIN_SECTOR_SIZE, RISK_KINDS, OptimizerConfig, optimize_weights
from .panel import (
    CATEGORIES,
    AssetPanel,
    PriceHistory,
    apply_exclusions,
    impute_carry_forward,
    load_asset_panel,
    load_prices,
    validate_panel,
)
from .rank_stats import MIN_TEST_N, independence_test, kendall_tau
from .risk import RiskTable, build_risk_table
from .scoring import (
    ESGM_CLASSES,
    PROVIDER_CLASSES,
    WeightVector,
    assign_esgm_class,
    assign_provider_class,
    esgm_scores,
    m_pillar,
    zero_count,
)

logger = logging.getLogger(__name__)

# report measure -> (risk table field, one-sided alternative)
MEASURES = {"var95": ("var95", "greater"), "vol": ("vol", "less"), "vv": ("vv", "greater")}
KIND_MEASURE = {"vvrisk": "vv", "var": "var95", "vol": "vol"}


@dataclass
class RunConfig:
    assets: Path
    prices: Path
    score_years: tuple
    risk_years: tuple = ()
    risk_kinds: tuple = RISK_KINDS
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    imputations: tuple = ()
    output_dir: Optional[Path] = None
    provider_weights: dict = field(default_factory=dict)
    min_sector_size: int = MIN_SECTOR_SIZE
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        self.score_years = tuple(int(y) for y in self.score_years)
        if not self.score_years:
            raise ConfigError("score_years must not be empty")
        if not self.risk_years:
            self.risk_years = tuple(y + 1 for y in self.score_years)
        self.risk_years = tuple(int(y) for y in self.risk_years)
        if len(self.risk_years) != len(self.score_years) or any(
            r != s + 1 for s, r in zip(self.score_years, self.risk_years)
        ):
            raise ConfigError(
                f"risk years {self.risk_years} must be score years {self.score_years} plus one"
            )
        if isinstance(self.risk_kinds, str):
            self.risk_kinds = RISK_KINDS if self.risk_kinds == "all" else (self.risk_kinds,)
        self.risk_kinds = tuple(self.risk_kinds)
        bad = [k for k in self.risk_kinds if k not in RISK_KINDS]
        if bad or not self.risk_kinds:
            raise ConfigError(f"unknown risk kinds {bad}; choose from {RISK_KINDS}")
        self.imputations = tuple((int(s), int(t)) for s, t in self.imputations)
        for s, t in self.imputations:
            if s >= t:
                raise ConfigError(f"imputation source {s} must precede target {t}")
        for sector, w in self.provider_weights.items():
            try:
                w = [float(v) for v in w]
                WeightVector(*w, 0.0)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"provider weights for {sector!r}: {exc}") from None
        if self.min_sector_size < MIN_SECTOR_SIZE:
            raise ConfigError(f"min_sector_size must be at least {MIN_SECTOR_SIZE}")
        if self.jobs < 1:
            raise ConfigError("jobs must be positive")

    @property
    def reference_kind(self) -> str:
        """Risk kind whose optimal weights define the reported ESGM scores."""
        return "vvrisk" if "vvrisk" in self.risk_kinds else self.risk_kinds[0]

    @classmethod
    def from_dict(cls, data: dict, base_dir=".") -> "RunConfig":
        data = dict(data)
        base = Path(base_dir)
        for key in ("assets", "prices"):
            if key not in data:
                raise ConfigError(f"config is missing {key!r}")
        if "score_years" not in data:
            raise ConfigError("config is missing 'score_years'")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data["assets"] = base / data["assets"]
        data["prices"] = base / data["prices"]
        if data.get("output_dir") is not None:
            data["output_dir"] = base / data["output_dir"]
        opt = data.get("optimizer") or {}
        try:
            data["optimizer"] = OptimizerConfig(**opt)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"optimizer settings: {exc}") from None
        data["imputations"] = [
            (d["source"], d["target"]) if isinstance(d, dict) else tuple(d)
            for d in data.get("imputations", [])
        ]
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data, base_dir=path.parent)


@dataclass
class ReportBundle:
    missingness: list = field(default_factory=list)
    sector_dependence: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    pooled_dependence: list = field(default_factory=list)
    ratings: list = field(default_factory=list)
    class_risk_summary: list = field(default_factory=list)
    pillar_tau: list = field(default_factory=list)
    scores: list = field(default_factory=list)
    panel: Optional[AssetPanel] = None
    risk: Optional[RiskTable] = None
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class _Problem:
    sector: str
    year: int
    kind: str
    pillars: np.ndarray
    risk: np.ndarray
    config: OptimizerConfig
    extra_starts: tuple


def _solve(problem: _Problem):
    try:
        return optimize_weights(problem.pillars, problem.risk, problem.kind, problem.config,
                                extra_starts=problem.extra_starts)
    except (EsgmError, ValueError) as exc:
        raise PipelineError(
            f"optimization failed for sector={problem.sector!r} year={problem.year}"
            f" kind={problem.kind}: {exc}"
        ) from exc


def problem_seed(seed: int, sector_index: int, year: int, kind: str) -> int:
    ss = np.random.SeedSequence([seed, sector_index, year, RISK_KINDS.index(kind)])
    return int(ss.generate_state(1)[0])


def written(value: float, fmt: str) -> float:
    """The value as it reads back from the CSV exports."""
    return float(format(value, fmt))


def _tau_and_test(x, y, alternative):
    try:
        tau = kendall_tau(x, y).tau
    except UndefinedTauError:
        return None, None
    if len(x) < MIN_TEST_N:
        return tau, None
    return tau, independence_test(x, y, alternative).p_value


def _dependence_cells(prefix, tau, p):
    return {
        f"{prefix}_tau": tau,
        f"{prefix}_p": p,
        f"{prefix}_sig": reports.significance(p),
        f"{prefix}_cell": reports.tau_cell(tau, p),
    }


def _quantiles(values):
    if len(values) == 0:
        return (None, None, None)
    return tuple(float(v) for v in np.quantile(values, [0.25, 0.5, 0.75]))


def run_pipeline(config: RunConfig, write: bool = True) -> ReportBundle:
    """Execute the whole study and, if ``config.output_dir`` is set, write every report."""
    panel = load_asset_panel(config.assets)
    prices = load_prices(config.prices)
    imputed = 0
    for source, target in config.imputations:
        try:
            panel, count = impute_carry_forward(panel, target, source)
        except ValueError as exc:
            raise PipelineError(f"imputation {source}->{target}: {exc}") from exc
        imputed += count

    report = validate_panel(panel, prices, score_years=config.score_years,
                            risk_years=config.risk_years, imputed=imputed)
    if not report.accepted:
        loc, rule = report.errors[0]
        raise PipelineError(f"input validation failed: {loc}: {rule} ({len(report.errors)} errors)")
    panel = apply_exclusions(panel, report)
    panel = AssetPanel(tuple(r for r in panel.records if r.year in config.score_years))
    prices = PriceHistory({a: prices[a] for a in panel.asset_ids()})
    risk = build_risk_table(prices, config.risk_years)

    bundle = ReportBundle(panel=panel, risk=risk)
    sector_index = {s: k for k, s in enumerate(panel.sectors)}

    # pillars per sector-year, assets ordered by id
    blocks = {}
    for year in config.score_years:
        for sector in panel.sectors:
            recs = panel.select(year, sector)
            if not recs:
                continue
            zeros = {r.asset_id: zero_count(r) for r in recs}
            m = m_pillar(zeros)
            ids = [r.asset_id for r in recs]
            pillars = np.array([[r.e_pillar, r.s_pillar, r.g_pillar, m[r.asset_id]] for r in recs])
            blocks[(sector, year)] = {"ids": ids, "recs": recs, "zeros": zeros, "m": m,
                                      "pillars": pillars}
            bundle.missingness.append(_missingness_row(sector, year, recs, zeros))

    problems = []
    for (sector, year), blk in blocks.items():
        n = len(blk["ids"])
        if n < config.min_sector_size:
            logger.warning("sector=%s year=%d: %d assets < %d, weights not optimized",
                           sector, year, n, config.min_sector_size)
            continue
        extra = ()
        if sector in config.provider_weights:
            extra = (tuple(float(v) for v in config.provider_weights[sector]) + (0.0,),)
        for kind in config.risk_kinds:
            column = risk.column(blk["ids"], year + 1, KIND_MEASURE[kind])
            opt = replace(config.optimizer,
                          seed=problem_seed(config.seed, sector_index[sector], year, kind))
            problems.append(_Problem(sector, year, kind, blk["pillars"], column, opt, extra))

    if config.jobs > 1 and len(problems) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_solve, problems))
    else:
        results = [_solve(p) for p in problems]

    optimal = {}
    for prob, res in zip(problems, results):
        optimal[(prob.sector, prob.year, prob.kind)] = res
        w = res.weights
        bundle.weights.append({
            "sector": prob.sector, "year": prob.year, "risk_kind": prob.kind,
            "w_e": w.w_e, "w_s": w.w_s, "w_g": w.w_g, "w_m": w.w_m,
            "objective": res.objective, "evals": res.evals,
        })

    ref = config.reference_kind
    pooled = {year: {"esg": [], "esgm": [], "ids": []} for year in config.score_years}
    for (sector, year), blk in sorted(blocks.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        ids = blk["ids"]
        res = optimal.get((sector, year, ref))
        esgm = None
        if res is not None:
            esgm = [written(v, ".6f") for v in esgm_scores(blk["pillars"], res.weights)]
        esg = np.array([r.provider_esg for r in blk["recs"]])
        for k, a in enumerate(ids):
            bundle.scores.append({
                "asset_id": a, "sector": sector, "year": year,
                "m_pillar": blk["m"][a],
                "esgm": None if esgm is None else esgm[k],
                "esgm_class": None if esgm is None else assign_esgm_class(esgm[k]),
                "provider_class": assign_provider_class(float(esg[k])),
                "esg": float(esg[k]),
            })
        for measure, (field_name, alternative) in MEASURES.items():
            y = np.array([written(v, ".10g") for v in risk.column(ids, year + 1, field_name)])
            row = {"sector": sector, "year": year, "risk_year": year + 1, "measure": measure,
                   "alternative": alternative, "n": len(ids)}
            row.update(_dependence_cells("esg", *_tau_and_test(esg, y, alternative)))
            if esgm is None:
                row.update(_dependence_cells("esgm", None, None))
            else:
                row.update(_dependence_cells("esgm", *_tau_and_test(np.array(esgm), y, alternative)))
            bundle.sector_dependence.append(row)
        pooled[year]["esg"].extend(esg.tolist())
        pooled[year]["ids"].extend(ids)
        pooled[year]["esgm"].extend(esgm if esgm is not None else [None] * len(ids))

    for year in config.score_years:
        _pooled_rows(bundle, year, pooled[year], risk)
        _rating_rows(bundle, year, risk)
        _pillar_tau_rows(bundle, year, blocks)

    bundle.summary = {
        "score_years": list(config.score_years),
        "risk_kinds": list(config.risk_kinds),
        "reference_kind": ref,
        "seed": config.seed,
        "records": report.counts,
        "imputed": imputed,
        "excluded_assets": len(report.excluded),
        "assets": len(panel.asset_ids()),
        "sectors": len(panel.sectors),
        "problems": len(problems),
        "warnings": len(report.warnings) + len(risk.warnings),
    }
    if write and config.output_dir is not None:
        reports.emit_reports(bundle, config.output_dir)
    return bundle


def _missingness_row(sector, year, recs, zeros):
    counts = np.array([zeros[r.asset_id] for r in recs])
    row = {
        "sector": sector, "year": year, "n_assets": len(recs),
        "share_with_missing": float(np.mean(counts > 0)),
        "mean_zero_count": float(np.mean(counts)),
    }
    for c in CATEGORIES:
        row[f"zero_share_{c}"] = float(np.mean([r.categories[c] == 0.0 for r in recs]))
    return row


def _pooled_rows(bundle, year, data, risk):
    keep = [k for k, v in enumerate(data["esgm"]) if v is not None]
    ids = data["ids"]
    esg = np.array(data["esg"])
    for measure, (field_name, alternative) in MEASURES.items():
        y = np.array([written(v, ".10g") for v in risk.column(ids, year + 1, field_name)])
        row = {"year": year, "risk_year": year + 1, "measure": measure,
               "alternative": alternative, "n": len(ids), "n_esgm": len(keep)}
        if len(ids) >= 2:
            row.update(_dependence_cells("esg", *_tau_and_test(esg, y, alternative)))
        else:
            row.update(_dependence_cells("esg", None, None))
        if len(keep) >= 2:
            x = np.array([data["esgm"][k] for k in keep])
            row.update(_dependence_cells("esgm", *_tau_and_test(x, y[keep], alternative)))
        else:
            row.update(_dependence_cells("esgm", None, None))
        bundle.pooled_dependence.append(row)


def _rating_rows(bundle, year, risk):
    rows = [r for r in bundle.scores if r["year"] == year]
    for scheme, classes, key in (("esgm", ESGM_CLASSES, "esgm_class"),
                                 ("provider", PROVIDER_CLASSES, "provider_class")):
        rated = [r for r in rows if r[key] is not None]
        for cls in classes:
            members = [r["asset_id"] for r in rated if r[key] == cls]
            bundle.ratings.append({
                "year": year, "scheme": scheme, "class": cls, "count": len(members),
                "share": len(members) / len(rated) if rated else None,
            })
            var_q = _quantiles(risk.column(members, year + 1, "var95"))
            vol_q = _quantiles(risk.column(members, year + 1, "vol"))
            bundle.class_risk_summary.append({
                "year": year, "risk_year": year + 1, "scheme": scheme, "class": cls,
                "n": len(members),
                "var95_q25": var_q[0], "var95_median": var_q[1], "var95_q75": var_q[2],
                "vol_q25": vol_q[0], "vol_median": vol_q[1], "vol_q75": vol_q[2],
            })


def _pillar_tau_rows(bundle, year, blocks):
    cols = {name: [] for name in ("esg", "e_pillar", "s_pillar", "g_pillar", "m_pillar")}
    for (sector, y), blk in sorted(blocks.items()):
        if y != year:
            continue
        for r in blk["recs"]:
            cols["esg"].append(r.provider_esg)
            cols["e_pillar"].append(r.e_pillar)
            cols["s_pillar"].append(r.s_pillar)
            cols["g_pillar"].append(r.g_pillar)
            cols["m_pillar"].append(blk["m"][r.asset_id])
    for a in cols:
        row = {"year": year, "variable": a}
        for b in cols:
            try:
                row[b] = kendall_tau(cols[a], cols[b]).tau if len(cols[a]) >= 2 else None
            except UndefinedTauError:
                row[b] = None
        bundle.pillar_tau.append(row)
