"""Filtering-based opinion dynamics with per-node thresholds.

At each step node ``i`` drops the ``t_i`` largest neighbor opinions strictly
above its own and the ``t_i`` smallest strictly below it, then moves to the
uniform average of its own opinion and the surviving (moderate) neighbors.
Equal extreme values are dropped lower node index first.

Two routes compute the same update: :func:`trim` plus :func:`step_reference`
work in plain Python, and :class:`FilterKernel` is the compiled version used
by :func:`simulate`. Both sum the node's own opinion and its moderate
neighbor values in ascending value order and clamp the mean into the range of
those values. The two routes therefore agree bit for bit, no update leaves
that range through rounding, and the result depends only on the multiset of
averaged values (a positive affine map of the state preserves that order).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .graph import Graph, members
from .robustness import as_thresholds

CONSENSUS = "consensus"
NO_CONSENSUS = "no-consensus-within-budget"


@dataclass(frozen=True)
class DynamicsConfig:
    weight_rule: str = "uniform"
    epsilon: float = 1e-9
    max_steps: int = 10_000
    eta: float | None = None  # declared weight lower bound; None means 1/n

    def validate(self, n: int) -> None:
        if self.weight_rule != "uniform":
            raise ValueError(f"unknown weight rule {self.weight_rule!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.eta is not None and not (0 < self.eta <= 1.0 / max(n, 1)):
            raise ValueError("eta must lie in (0, 1/n] under uniform weights")


@dataclass(frozen=True)
class TrimResult:
    moderate: tuple[int, ...]
    removed_above: tuple[int, ...]
    removed_below: tuple[int, ...]


def trim(own: float, neighbor_opinions: Sequence[tuple[int, float]], t: int) -> TrimResult:
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    above = sorted((item for item in neighbor_opinions if item[1] > own), key=lambda it: (-it[1], it[0]))
    below = sorted((item for item in neighbor_opinions if item[1] < own), key=lambda it: (it[1], it[0]))
    removed_above = tuple(j for j, _ in above[:t])
    removed_below = tuple(j for j, _ in below[:t])
    dropped = set(removed_above) | set(removed_below)
    moderate = tuple(sorted(j for j, _ in neighbor_opinions if j not in dropped))
    return TrimResult(moderate, removed_above, removed_below)


def _uniform_update(values: Sequence[float]) -> float:
    """Mean of ``values`` summed in ascending order, clamped into their range."""
    ordered = sorted(values)
    total = 0.0
    for v in ordered:
        total += v
    # rounding can push the mean an ulp past the averaged values; clamp it back
    return min(max(total / len(ordered), ordered[0]), ordered[-1])


def step_reference(g: Graph, thresholds: Sequence[int], x: Sequence[float]) -> np.ndarray:
    """One synchronous update, computed node by node."""
    t = as_thresholds(g, thresholds)
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    for i, nbrs in enumerate(g.neighbors):
        res = trim(float(x[i]), [(j, float(x[j])) for j in nbrs], int(t[i]))
        out[i] = _uniform_update([float(x[i])] + [float(x[j]) for j in res.moderate])
    return out


@njit(cache=True)
def _filtered_update(xs, table, degree, t, outs):
    pool = np.zeros(table.shape[1] + 1)
    for r in range(xs.shape[0]):
        _filtered_row(xs[r], table, degree, t, outs[r], pool)


@njit(cache=True)
def _filtered_row(x, table, degree, t, out, pool):
    # Only the multiset of kept values matters for the update, so the kernel
    # sorts the neighbor values and cuts the extremes from both ends instead
    # of tracking which node is dropped.
    for i in range(x.shape[0]):
        own = x[i]
        d = degree[i]
        for a in range(d):
            v = x[table[i, a]]
            b = a
            while b > 0 and pool[b - 1] > v:
                pool[b] = pool[b - 1]
                b -= 1
            pool[b] = v
        below = 0
        while below < d and pool[below] < own:
            below += 1
        above = 0
        while above < d - below and pool[d - 1 - above] > own:
            above += 1
        lo = min(t[i], below)
        hi = d - min(t[i], above)
        # own is summed in its sorted position, after the kept values below it
        total = 0.0
        for a in range(lo, below):
            total += pool[a]
        total += own
        for a in range(below, hi):
            total += pool[a]
        kept = hi - lo + 1
        first = pool[lo] if lo < below else own
        last = pool[hi - 1] if hi > below and pool[hi - 1] > own else own
        out[i] = min(max(total / kept, first), last)


@njit(cache=True)
def _iterate_rows(xs, table, degree, t, epsilon, max_steps, steps, status):
    # per row: status 0 = consensus, 1 = budget exhausted, 2 = exact fixed point
    pool = np.zeros(table.shape[1] + 1)
    nxt = np.empty(xs.shape[1])
    for r in range(xs.shape[0]):
        x = xs[r]
        k = 0
        while True:
            if x.size == 0 or x.max() - x.min() < epsilon:
                status[r] = 0
                break
            if k == max_steps:
                status[r] = 1
                break
            _filtered_row(x, table, degree, t, nxt, pool)
            same = True
            for i in range(x.size):
                if nxt[i] != x[i]:
                    same = False
                    break
            if same:
                status[r] = 2
                break
            x[:] = nxt
            k += 1
        steps[r] = k


class FilterKernel:
    """Precomputed padded neighbor table for fast updates.

    ``apply`` accepts opinion arrays of shape ``(n,)`` or ``(batch, n)``; rows
    are updated independently.
    """

    def __init__(self, g: Graph, thresholds: Sequence[int]):
        self.n = g.n
        self.t = as_thresholds(g, thresholds)
        width = max((len(nb) for nb in g.neighbors), default=0)
        table = np.zeros((g.n, max(width, 1)), dtype=np.int64)
        for i, nb in enumerate(g.neighbors):
            table[i, : len(nb)] = nb
        self.table = table
        self.degree = np.array([len(nb) for nb in g.neighbors], dtype=np.int64)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        xs = x.reshape(-1, self.n)
        out = np.empty_like(xs)
        _filtered_update(xs, self.table, self.degree, self.t, out)
        return out.reshape(x.shape)


def step(g: Graph, thresholds: Sequence[int], x: Sequence[float], cfg: DynamicsConfig | None = None) -> np.ndarray:
    cfg = cfg or DynamicsConfig()
    cfg.validate(g.n)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.n,):
        raise ValueError(f"expected {g.n} opinions, got shape {x.shape}")
    return FilterKernel(g, thresholds).apply(x)


def gap(x: np.ndarray) -> float:
    return float(x.max() - x.min()) if x.size else 0.0


@dataclass
class SimulationResult:
    verdict: str
    steps: int
    final_gap: float
    final_state: np.ndarray
    gaps: list[float] = field(default_factory=list)

    @property
    def consensus(self) -> bool:
        return self.verdict == CONSENSUS

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "steps": self.steps,
            "final_gap": self.final_gap,
            "final_state": self.final_state.tolist(),
        }


def _check_state(g: Graph, x0) -> np.ndarray:
    x = np.array(x0, dtype=np.float64)
    if x.shape[-1:] != (g.n,):
        raise ValueError(f"expected {g.n} opinions per state, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("opinions must be finite")
    return x


def simulate(
    g: Graph,
    thresholds: Sequence[int],
    x0: Sequence[float],
    cfg: DynamicsConfig | None = None,
    record_gaps: bool = True,
) -> SimulationResult:
    """Iterate until the gap drops below ``epsilon`` or ``max_steps`` updates ran.

    ``gaps[k]`` is the gap of the state after ``k`` updates. Running out of
    budget is reported as such; it is not evidence that consensus fails.
    """
    cfg = cfg or DynamicsConfig()
    cfg.validate(g.n)
    kernel = FilterKernel(g, thresholds)
    x = _check_state(g, x0)
    gaps = []
    k = 0
    while True:
        current = gap(x)
        if record_gaps:
            gaps.append(current)
        if current < cfg.epsilon:
            return SimulationResult(CONSENSUS, k, current, x, gaps)
        if k == cfg.max_steps:
            return SimulationResult(NO_CONSENSUS, k, current, x, gaps)
        nxt = kernel.apply(x)
        if np.array_equal(nxt, x):
            # exact fixed point: every remaining step would reproduce this state
            if record_gaps:
                gaps.extend([current] * (cfg.max_steps - k))
            return SimulationResult(NO_CONSENSUS, cfg.max_steps, current, x, gaps)
        x = nxt
        k += 1


def simulate_many(
    g: Graph,
    thresholds: Sequence[int],
    x0s: np.ndarray,
    cfg: DynamicsConfig | None = None,
) -> list[SimulationResult]:
    """Run several initial states at once; each result equals a lone :func:`simulate` run."""
    cfg = cfg or DynamicsConfig()
    cfg.validate(g.n)
    kernel = FilterKernel(g, thresholds)
    x = _check_state(g, x0s)
    if x.ndim != 2:
        raise ValueError("expected a (batch, n) array of initial states")
    steps = np.zeros(x.shape[0], dtype=np.int64)
    status = np.zeros(x.shape[0], dtype=np.int64)
    _iterate_rows(x, kernel.table, kernel.degree, kernel.t, cfg.epsilon, cfg.max_steps, steps, status)
    results = []
    for row, k, code in zip(x, steps, status):
        final = gap(row)
        verdict = CONSENSUS if code == 0 else NO_CONSENSUS
        results.append(SimulationResult(verdict, cfg.max_steps if code == 2 else int(k), final, row.copy()))
    return results


def witness_initial_condition(s1: int, s2: int, n: int) -> np.ndarray:
    """Opinions 0 on ``s1``, 1 on ``s2`` and 0.5 on every other node."""
    if s1 == 0 or s2 == 0:
        raise ValueError("witness sets must be nonempty")
    if s1 & s2:
        raise ValueError("witness sets must be disjoint")
    if (s1 | s2) >> n:
        raise ValueError("witness sets exceed the node range")
    x = np.full(n, 0.5)
    x[members(s1)] = 0.0
    x[members(s2)] = 1.0
    return x


def uniform_random_init(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random(n)


def random_bisection(n: int, rng: np.random.Generator) -> np.ndarray:
    """Opinion 0 on a uniformly random half of the nodes (rounded down), 1 on the rest."""
    x = np.ones(n)
    x[rng.permutation(n)[: n // 2]] = 0.0
    return x
