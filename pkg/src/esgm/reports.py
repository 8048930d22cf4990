"""CSV report writing and cross-checking of a written report directory."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import UndefinedTauError
from .panel import CATEGORIES, load_asset_panel, write_asset_panel
from .rank_stats import kendall_tau
from .risk import read_risk_table, write_risk_table
from .scoring import write_scores

REPORT_FILES = (
    "missingness.csv",
    "sector_dependence.csv",
    "weights.csv",
    "pooled_dependence.csv",
    "ratings.csv",
    "class_risk_summary.csv",
)

WEIGHT_COLUMNS = ("sector", "year", "risk_kind", "w_e", "w_s", "w_g", "w_m", "objective", "evals")
_DEP = ("tau", "p", "sig", "cell")
SECTOR_DEP_COLUMNS = (("sector", "year", "risk_year", "measure", "alternative", "n")
                      + tuple(f"esg_{c}" for c in _DEP) + tuple(f"esgm_{c}" for c in _DEP))
POOLED_DEP_COLUMNS = (("year", "risk_year", "measure", "alternative", "n", "n_esgm")
                      + tuple(f"esg_{c}" for c in _DEP) + tuple(f"esgm_{c}" for c in _DEP))
RATING_COLUMNS = ("year", "scheme", "class", "count", "share")
CLASS_RISK_COLUMNS = ("year", "risk_year", "scheme", "class", "n", "var95_q25", "var95_median",
                      "var95_q75", "vol_q25", "vol_median", "vol_q75")
MISSINGNESS_COLUMNS = (("sector", "year", "n_assets", "share_with_missing", "mean_zero_count")
                       + tuple(f"zero_share_{c}" for c in CATEGORIES))
PILLAR_TAU_COLUMNS = ("year", "variable", "esg", "e_pillar", "s_pillar", "g_pillar", "m_pillar")


def significance(p: Optional[float]) -> str:
    """``**`` for p <= 0.05, ``*`` for p <= 0.1, otherwise empty."""
    if p is None:
        return ""
    if p <= 0.05:
        return "**"
    if p <= 0.1:
        return "*"
    return ""


def tau_cell(tau: Optional[float], p: Optional[float]) -> str:
    if tau is None:
        return ""
    mark = significance(p)
    return f"{tau:.6f}" + (f"({mark})" if mark else "")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            return ""
        return f"{float(value):.6f}"
    return str(value)


def write_table(rows, columns, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


def render_summary(bundle) -> str:
    s = bundle.summary
    lines = [
        "ESGM run summary",
        f"score years: {', '.join(str(y) for y in s.get('score_years', []))}",
        f"risk kinds: {', '.join(s.get('risk_kinds', []))} (scores use {s.get('reference_kind')})",
        f"seed: {s.get('seed')}",
        f"assets analysed: {s.get('assets')} in {s.get('sectors')} sectors",
        f"records: {json.dumps(s.get('records', {}), sort_keys=True)}",
        f"imputed assets: {s.get('imputed')}",
        f"excluded assets: {s.get('excluded_assets')}",
        f"optimization problems: {s.get('problems')}",
        f"warnings: {s.get('warnings')}",
        "",
        "mean optimized objective by risk kind:",
    ]
    by_kind = {}
    for row in bundle.weights:
        by_kind.setdefault(row["risk_kind"], []).append(row["objective"])
    for kind in sorted(by_kind):
        lines.append(f"  {kind}: {np.mean(by_kind[kind]):.6f} over {len(by_kind[kind])} problems")
    lines.append("")
    lines.append("pooled dependence (tau, p):")
    for row in bundle.pooled_dependence:
        lines.append(
            f"  {row['year']}->{row['risk_year']} {row['measure']:>5}:"
            f" ESG {tau_cell(row['esg_tau'], row['esg_p']) or 'n/a'}"
            f" | ESGM {tau_cell(row['esgm_tau'], row['esgm_p']) or 'n/a'}"
        )
    return "\n".join(lines) + "\n"


def emit_reports(bundle, outdir) -> list:
    """Write every report of ``bundle`` into ``outdir`` and return the file paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [
        write_table(bundle.missingness, MISSINGNESS_COLUMNS, outdir / "missingness.csv"),
        write_table(bundle.sector_dependence, SECTOR_DEP_COLUMNS, outdir / "sector_dependence.csv"),
        write_table(bundle.weights, WEIGHT_COLUMNS, outdir / "weights.csv"),
        write_table(bundle.pooled_dependence, POOLED_DEP_COLUMNS, outdir / "pooled_dependence.csv"),
        write_table(bundle.ratings, RATING_COLUMNS, outdir / "ratings.csv"),
        write_table(bundle.class_risk_summary, CLASS_RISK_COLUMNS, outdir / "class_risk_summary.csv"),
        write_table(bundle.pillar_tau, PILLAR_TAU_COLUMNS, outdir / "pillar_tau.csv"),
        write_scores(bundle.scores, outdir / "scores.csv"),
    ]
    if bundle.risk is not None:
        paths.append(write_risk_table(bundle.risk, outdir / "risk.csv"))
    if bundle.panel is not None:
        paths.append(write_asset_panel(bundle.panel, outdir / "assets_used.csv"))
    summary = outdir / "summary.txt"
    summary.write_text(render_summary(bundle))
    paths.append(summary)
    return paths


def read_table(path) -> list:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def verify_bundle(outdir) -> list:
    """Recompute every sector tau from ``scores.csv``, ``risk.csv`` and ``assets_used.csv``.

    Reported cells carry 6 decimals, so the comparison is on the formatted
    value. Returns a list of mismatch descriptions (empty when consistent).
    """
    outdir = Path(outdir)
    scores = read_table(outdir / "scores.csv")
    risk = read_risk_table(outdir / "risk.csv")
    panel = load_asset_panel(outdir / "assets_used.csv")
    problems = []
    groups = {}
    for row in scores:
        groups.setdefault((row["sector"], int(row["year"])), []).append(row)
    for dep in read_table(outdir / "sector_dependence.csv"):
        key = (dep["sector"], int(dep["year"]))
        rows = groups.get(key, [])
        ids = [r["asset_id"] for r in rows]
        field_name = dep["measure"]
        y = risk.column(ids, int(dep["risk_year"]), field_name)
        esg = [panel.get(a, key[1]).provider_esg for a in ids]
        checks = [("esg", esg)]
        if all(r["esgm"] != "" for r in rows):
            checks.append(("esgm", [float(r["esgm"]) for r in rows]))
        for name, x in checks:
            reported = dep[f"{name}_tau"]
            try:
                tau = kendall_tau(x, y).tau
            except (UndefinedTauError, ValueError):
                tau = None
            if reported == "" and tau is None:
                continue
            if reported == "" or tau is None or reported != f"{tau:.6f}":
                problems.append(f"{key} {field_name} {name}: reported {reported!r}, recomputed {tau}")
    return problems
