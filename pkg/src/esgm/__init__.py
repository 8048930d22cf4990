"""ESG scores extended with a missing-information pillar.

The package computes the M-pillar from zero-inflated category scores,
annual risk measures from daily prices, per-sector pillar weights that
maximize Kendall's tau with next-year risk, and rating classes.
"""

from .optimizer import (
    OptimizerConfig,
    OptResult,
    grid_search_weights,
    optimize_weights,
    risk_objective,
)
from .panel import (
    AssetPanel,
    AssetRecord,
    PriceHistory,
    impute_carry_forward,
    load_asset_panel,
    load_prices,
    validate_panel,
)
from .pipeline import ReportBundle, RunConfig, run_pipeline
from .rank_stats import independence_test, kendall_tau, permutation_pvalue
from .reports import emit_reports
from .risk import build_risk_table, empirical_var, log_returns, volatility, vv_risk
from .scoring import (
    WeightVector,
    assign_esgm_class,
    assign_provider_class,
    esgm_score,
    m_pillar,
    provider_esg_score,
    zero_count,
)
from .synthetic import SyntheticSpec, generate_synthetic_panel

__version__ = "0.1.0"
