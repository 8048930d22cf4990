import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from esgm.errors import DegenerateInstanceError
from esgm.optimizer import (
    BARYCENTER,
    OptimizerConfig,
    grid_search_weights,
    lattice_size,
    optimize_weights,
    risk_objective,
    simplex_lattice,
)
from esgm.rank_stats import kendall_tau
from esgm.scoring import WeightVector, esgm_scores
from instances import synthetic_instance

FAST = OptimizerConfig(n_starts=8)


def _random_instance(n, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 100, (n, 4)), rng.normal(size=n)


def test_objective_sign_conventions():
    pillars, _ = _random_instance(30, 0)
    w = WeightVector(0.1, 0.2, 0.3, 0.4)
    scores = esgm_scores(pillars, w)
    assert risk_objective(w, pillars, -np.exp(scores / 50), "vol") == 1.0
    assert risk_objective(w, pillars, scores, "var") == 1.0
    assert risk_objective(w, pillars, scores, "vvrisk") == 1.0


def test_objective_matches_rank_stats():
    pillars, risk = _random_instance(30, 1)
    w = WeightVector(0.4, 0.3, 0.2, 0.1)
    expected = -kendall_tau(esgm_scores(pillars, w), risk).tau
    assert risk_objective(w, pillars, risk, "vol") == expected


def test_objective_input_checks():
    pillars, risk = _random_instance(9, 2)
    with pytest.raises(ValueError):
        risk_objective(WeightVector(*BARYCENTER), pillars, risk, "var")
    with pytest.raises(ValueError):
        risk_objective(WeightVector(*BARYCENTER), pillars[:, :3], risk, "var")
    with pytest.raises(ValueError):
        risk_objective(WeightVector(*BARYCENTER), pillars, risk, "sharpe")


def test_constant_scores_give_minus_infinity():
    pillars = np.full((12, 4), 30.0)
    assert risk_objective(WeightVector(*BARYCENTER), pillars, np.arange(12.0), "var") == -math.inf
    with pytest.raises(DegenerateInstanceError):
        optimize_weights(pillars, np.arange(12.0), "var", FAST)


def test_planted_m_pillar_instance():
    rng = np.random.default_rng(3)
    m = rng.permutation(np.linspace(1, 99, 40))
    pillars = np.column_stack([rng.uniform(0, 100, (40, 3)), m])
    risk = -np.exp(-m / 20)  # increasing in m, like vv risk
    res = optimize_weights(pillars, risk, "vvrisk")
    assert res.weights.w_m >= 0.9
    grid = grid_search_weights(pillars, risk, "vvrisk", step=0.02)
    assert res.objective >= grid.objective - 0.01
    assert grid.weights.as_tuple() == (0.0, 0.0, 0.0, 1.0)


def test_vertex_optimum_is_a_valid_weight_vector():
    # accumulated edge moves once ended at w_m = 1.0000000000000002
    pillars = np.random.default_rng(0).uniform(0, 100, (40, 4))
    res = optimize_weights(pillars, -np.exp(-pillars[:, 3] / 20), "vvrisk", OptimizerConfig(seed=1))
    assert res.weights.as_tuple() == (0.0, 0.0, 0.0, 1.0)
    assert res.objective == 1.0


def test_identical_columns_return_barycenter():
    col = np.random.default_rng(4).uniform(0, 100, 20)
    pillars = np.column_stack([col] * 4)
    res = optimize_weights(pillars, np.random.default_rng(5).normal(size=20), "var", FAST)
    assert res.weights.as_tuple() == BARYCENTER


def test_lattice():
    assert len(simplex_lattice(0.5)) == lattice_size(0.5) == 10
    lat = simplex_lattice(0.02)
    assert len(lat) == math.comb(53, 3)
    assert np.allclose(lat.sum(axis=1), 1.0) and lat.min() >= 0
    with pytest.raises(ValueError):
        simplex_lattice(0.03)
    pillars, risk = _random_instance(12, 6)
    assert grid_search_weights(pillars, risk, "var", step=0.5).evals == 10


def test_grid_returns_exact_vertex():
    rng = np.random.default_rng(7)
    pillars = rng.uniform(0, 100, (30, 4))
    res = grid_search_weights(pillars, pillars[:, 1], "var", step=0.05)
    assert res.weights.as_tuple() == (0.0, 1.0, 0.0, 0.0)
    assert res.objective == 1.0


@pytest.mark.parametrize("kind", ["vvrisk", "var", "vol"])
def test_result_feasible_and_consistent(kind):
    pillars, risk = synthetic_instance(23, 11, kind, strength=0.5)
    res = optimize_weights(pillars, risk, kind, FAST)
    w = res.weights.as_tuple()
    assert min(w) >= 0 and abs(sum(w) - 1) <= 1e-8
    assert abs(risk_objective(res.weights, pillars, risk, kind) - res.objective) <= 1e-12
    assert res.evals <= FAST.max_evals


def test_determinism():
    pillars, risk = synthetic_instance(30, 12, "var", strength=0.4)
    a = optimize_weights(pillars, risk, "var", OptimizerConfig(seed=5))
    b = optimize_weights(pillars, risk, "var", OptimizerConfig(seed=5))
    assert a == b


def test_budget_is_shared():
    pillars, risk = synthetic_instance(30, 13, "var", strength=0.4)
    res = optimize_weights(pillars, risk, "var", OptimizerConfig(max_evals=200))
    assert res.evals <= 200


def test_perturbation_keeps_objective():
    # continuous pillars: the optimum sits strictly inside a ranking cell or on
    # a face, so tiny feasible moves do not change the induced ranking
    for seed in range(5):
        pillars, risk = _random_instance(25, 100 + seed)
        res = optimize_weights(pillars, risk, "var", FAST)
        w = res.weights.as_array()
        for i in range(4):
            for j in range(4):
                if i == j or w[j] < 1e-9:
                    continue
                v = w.copy()
                v[i] += 1e-9
                v[j] -= 1e-9
                v = np.clip(v, 0, None)
                obj = risk_objective(WeightVector(*(v / v.sum())), pillars, risk, "var")
                assert obj == res.objective


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.floats(0, 1), min_size=3, max_size=3)
       .filter(lambda w: sum(w) > 1e-3))
def test_dominance_over_provider_weights(seed, raw):
    provider = [v / sum(raw) for v in raw]
    provider[2] = max(0.0, 1.0 - provider[0] - provider[1])
    pillars, risk = _random_instance(15, seed)
    res = optimize_weights(pillars, risk, "vvrisk", OptimizerConfig(n_starts=5),
                           extra_starts=[provider + [0.0]])
    assert res.objective >= risk_objective(WeightVector(*provider, 0.0), pillars, risk, "vvrisk")


def test_risk_scaling_leaves_result_unchanged():
    pillars, risk = synthetic_instance(23, 15, "vol", strength=0.5)
    a = optimize_weights(pillars, risk, "vol", FAST)
    b = optimize_weights(pillars, 7.5 * risk, "vol", FAST)
    assert a.objective == b.objective and a.weights == b.weights


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(n_starts=0)
    with pytest.raises(ValueError):
        OptimizerConfig(initial_step=1e-6)
