"""Pillar weights that maximize rank dependence with next-year risk.

The objective is Kendall's tau-b between the ESGM scores and a risk column,
sign-flipped for volatility so that maximizing always means "higher score,
lower risk". It depends on the weights only through the ranking they induce,
so it is piecewise constant and derivative-free search is the only option.

:func:`optimize_weights` runs a multi-start pattern search that moves along
the simplex edges ``e_i - e_j`` and never leaves the feasible set.
:func:`grid_search_weights` enumerates a lattice on the simplex and serves as
an independent check.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import DegenerateInstanceError, SearchError
from .rank_stats import pair_signs, tau_b_columns
from .scoring import WeightVector

logger = logging.getLogger(__name__)

RISK_KINDS = ("vvrisk", "var", "vol")
MIN_SECTOR_SIZE = 10

BARYCENTER = (0.25, 0.25, 0.25, 0.25)
VERTICES = tuple(tuple(1.0 if i == k else 0.0 for i in range(4)) for k in range(4))
# ordered coordinate pairs (i, j): move weight from j to i
_MOVES = tuple((i, j) for i in range(4) for j in range(4) if i != j)
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class OptimizerConfig:
    n_starts: int = 20
    initial_step: float = 1e-1
    final_step: float = 1e-5
    max_evals: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if not (0 < self.final_step < self.initial_step <= 1):
            raise ValueError("need 0 < final_step < initial_step <= 1")
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")


@dataclass(frozen=True)
class OptResult:
    weights: WeightVector
    objective: float
    evals: int
    start_index: int


def _check_kind(kind: str):
    if kind not in RISK_KINDS:
        raise ValueError(f"risk kind must be one of {RISK_KINDS}, got {kind!r}")


def _sign(kind: str) -> float:
    return -1.0 if kind == "vol" else 1.0


class _Objective:
    """Batched evaluation of the risk objective on one instance."""

    def __init__(self, pillars, risk, kind: str):
        _check_kind(kind)
        p = np.asarray(pillars, dtype=float)
        r = np.asarray(risk, dtype=float).ravel()
        if p.ndim != 2 or p.shape[1] != 4:
            raise ValueError("pillars must be an (n, 4) array of E, S, G, M scores")
        if p.shape[0] != len(r):
            raise ValueError(f"pillars have {p.shape[0]} rows but risk has {len(r)}")
        if len(r) < MIN_SECTOR_SIZE:
            raise ValueError(f"need at least {MIN_SECTOR_SIZE} assets, got {len(r)}")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(r))):
            raise ValueError("pillars and risk must be finite")
        self.pillars = p
        self.dy = pair_signs(r)
        self.sign = _sign(kind)
        self.evals = 0

    def scores(self, W: np.ndarray) -> np.ndarray:
        # same summation order as scoring.esgm_score
        p = self.pillars
        return (p[:, 0:1] * W[:, 0] + p[:, 1:2] * W[:, 1]
                + p[:, 2:3] * W[:, 2] + p[:, 3:4] * W[:, 3])

    def __call__(self, W) -> np.ndarray:
        W = np.atleast_2d(np.asarray(W, dtype=float))
        self.evals += len(W)
        tau = tau_b_columns(self.dy, self.scores(W))
        out = self.sign * tau
        out[np.isnan(tau)] = -np.inf
        return out


def risk_objective(w: WeightVector, pillars, risk, kind: str) -> float:
    """tau(ESGM, vv) for ``vvrisk``, tau(ESGM, VaR) for ``var``, -tau(ESGM, vol) for ``vol``.

    Returns ``-inf`` when the ESGM column is constant under ``w``.
    """
    obj = _Objective(pillars, risk, kind)
    return float(obj(np.array([w.as_tuple()]))[0])


def _key(objective: float, w) -> tuple:
    # larger is better: objective, then w_m, then lexicographically smaller
    return (objective, w[3], tuple(-v for v in w))


def _pattern_search(obj: _Objective, w0, config: OptimizerConfig, budget: int):
    """Poll all 12 edge moves, take the best strict improvement, else halve the step."""
    w = np.array(w0, dtype=float)
    f = float(obj(w[None, :])[0])
    used = 1
    improved = False
    step = config.initial_step
    while step >= config.final_step and used < budget:
        cands = []
        for i, j in _MOVES:
            delta = min(step / _SQRT2, w[j])
            if delta <= 0.0:
                continue
            c = w.copy()
            c[i] = min(c[i] + delta, 1.0)  # rounding may otherwise overshoot a vertex
            c[j] -= delta
            cands.append(c)
        if not cands:
            step /= 2.0
            continue
        cands = np.array(cands[: budget - used])
        vals = obj(cands)
        used += len(cands)
        best = int(np.argmax(vals))
        if vals[best] > f:
            w, f = cands[best], float(vals[best])
            improved = True
        else:
            step /= 2.0
    return w, f, used, improved


def _as_tuple(w) -> tuple:
    # edge moves keep every coordinate >= 0 exactly; the sum drifts by ulps only
    return tuple(float(v) for v in w)


def _starts(config: OptimizerConfig, extra_starts) -> list:
    rng = np.random.default_rng(config.seed)
    starts = []
    if config.n_starts >= 5:
        starts.append(BARYCENTER)
        starts.extend(VERTICES)
    n_random = config.n_starts - len(starts)
    starts.extend(tuple(float(v) for v in d) for d in rng.dirichlet(np.ones(4), size=n_random))
    for w in extra_starts or ():
        starts.append(WeightVector.from_sequence(w).as_tuple())
    return starts


def optimize_weights(
    pillars,
    risk,
    kind: str,
    config: Optional[OptimizerConfig] = None,
    extra_starts: Optional[Iterable] = None,
) -> OptResult:
    """Multi-start pattern search over the E/S/G/M weight simplex.

    With ``n_starts >= 5`` the starts are the barycenter, the four vertices
    and ``n_starts - 5`` Dirichlet(1, 1, 1, 1) draws; ``extra_starts`` (for
    example provider weights padded with ``w_m = 0``) are appended. The
    ``max_evals`` budget is shared by all starts. Among equal objectives the
    result with larger ``w_m`` wins, then the lexicographically smaller vector.
    If no start ever improves and all starts tie, the landscape is flat and
    the barycenter is returned.
    """
    config = config or OptimizerConfig()
    obj = _Objective(pillars, risk, kind)
    starts = _starts(config, extra_starts)

    best = None
    any_improved = False
    start_values = []
    for idx, w0 in enumerate(starts):
        remaining = config.max_evals - obj.evals
        if remaining <= 0:
            break
        w, f, _, improved = _pattern_search(obj, w0, config, remaining)
        any_improved |= improved
        start_values.append(f)
        wt = _as_tuple(w)
        if best is None or _key(f, wt) > _key(best[0], best[1]):
            best = (f, wt, idx)

    if best is None:
        raise SearchError("evaluation budget exhausted before any feasible evaluation")
    if best[0] == -np.inf:
        raise DegenerateInstanceError("ESGM scores are constant for every evaluated weight vector")
    if (not any_improved and len(start_values) == len(starts)
            and all(v == start_values[0] for v in start_values)):
        best = (best[0], BARYCENTER, starts.index(BARYCENTER) if BARYCENTER in starts else best[2])

    weights = WeightVector(*best[1])
    objective = risk_objective(weights, obj.pillars, risk, kind)
    logger.debug("kind=%s objective=%.6f evals=%d start=%d", kind, objective, obj.evals, best[2])
    return OptResult(weights, objective, obj.evals, best[2])


def simplex_lattice(step: float) -> np.ndarray:
    """All points ``(i, j, k, l) / N`` with ``i + j + k + l = N = 1 / step``."""
    n = round(1.0 / step)
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"step must divide 1 evenly, got {step}")
    pts = [(i, j, k, n - i - j - k)
           for i in range(n + 1) for j in range(n + 1 - i) for k in range(n + 1 - i - j)]
    return np.array(pts, dtype=float) / n


def grid_search_weights(pillars, risk, kind: str, step: float = 0.02,
                        chunk: int = 1024) -> OptResult:
    """Exhaustive search over the simplex lattice with spacing ``step``."""
    obj = _Objective(pillars, risk, kind)
    lattice = simplex_lattice(step)
    values = np.concatenate([obj(lattice[k:k + chunk]) for k in range(0, len(lattice), chunk)])
    top = np.flatnonzero(values == values.max())
    best_idx = max(top, key=lambda k: _key(values[k], tuple(lattice[k])))
    if values[best_idx] == -np.inf:
        raise DegenerateInstanceError("ESGM scores are constant on the whole lattice")
    w = WeightVector(*(float(v) for v in lattice[best_idx]))
    return OptResult(w, float(values[best_idx]), len(lattice), int(best_idx))


def lattice_size(step: float) -> int:
    n = round(1.0 / step)
    return math.comb(n + 3, 3)
