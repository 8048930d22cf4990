"""Single-sector optimization instances drawn from the synthetic generator."""

import numpy as np

from esgm.pipeline import KIND_MEASURE
from esgm.risk import build_risk_table
from esgm.scoring import m_pillar, zero_count
from esgm.synthetic import SyntheticSpec, generate_synthetic_panel


def synthetic_instance(n, seed, kind="vvrisk", strength=1.0, planted="m"):
    """Return ``(pillars, risk)`` for one sector of ``n`` assets, scores 2017, risk 2018."""
    spec = SyntheticSpec(sectors={"X": n}, score_years=(2017,), strength=strength,
                         planted_pillar=planted, seed=seed)
    panel, prices = generate_synthetic_panel(spec)
    table = build_risk_table(prices, [2018])
    recs = panel.select(2017, "X")
    m = m_pillar({r.asset_id: zero_count(r) for r in recs})
    pillars = np.array([[r.e_pillar, r.s_pillar, r.g_pillar, m[r.asset_id]] for r in recs])
    risk = table.column([r.asset_id for r in recs], 2018, KIND_MEASURE[kind])
    return pillars, risk
