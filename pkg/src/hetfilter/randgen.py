"""Seeded random graph and threshold generators.

Every sampler takes an integer seed and draws from its own labelled stream
(see :mod:`hetfilter.rng`). Node pairs are always visited in lexicographic
``(i, j), i < j`` order with one uniform draw per candidate pair, so the same
seed gives the same graph on every platform, and samplers that differ only in
the per-pair probability share their draws (a constant probability matrix
reproduces :func:`sample_er` exactly).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .graph import Graph, GraphError
from .rng import Stream, generator


class EdgeProbability(NamedTuple):
    p: float
    clamped: bool


def _threshold_numerator(n: int, r: int, c: float) -> float:
    if n < 3:
        raise ValueError("edge-probability formula needs n >= 3 (ln ln n must be positive)")
    if r < 1:
        raise ValueError("r must be a positive integer")
    return math.log(n) + (r - 1) * math.log(math.log(n)) + c


def _clamp(value: float) -> EdgeProbability:
    if value < 0.0:
        return EdgeProbability(0.0, True)
    if value > 1.0:
        return EdgeProbability(1.0, True)
    return EdgeProbability(value, False)


def er_edge_probability(n: int, r: int, c: float) -> EdgeProbability:
    """``(ln n + (r-1) ln ln n + c) / n`` clamped to [0, 1]."""
    return _clamp(_threshold_numerator(n, r, c) / n)


def rin_edge_probability(k: int, n: int, r: int, c: float) -> EdgeProbability:
    """Inter-community probability ``(ln n + (r-1) ln ln n + c) / ((k-1) n)``."""
    if k < 2:
        raise ValueError("need at least two communities")
    return _clamp(_threshold_numerator(n, r, c) / ((k - 1) * n))


_SCHEDULE = re.compile(r"^\s*(constant|neg-constant)\(\s*([-+0-9.eE]+)\s*\)\s*$")


def resolve_c(c: float | str, n: int) -> float:
    """Evaluate an offset given as a number or a named schedule at ``n``.

    Schedules: ``constant(a)``, ``neg-constant(a)`` (that is ``-a``) and
    ``lnlnln`` (``ln ln ln n``, needs ``n > e``).
    """
    if isinstance(c, (int, float)) and not isinstance(c, bool):
        return float(c)
    text = str(c).strip()
    if text == "lnlnln":
        inner = math.log(math.log(n))
        if inner <= 0:
            raise ValueError("lnlnln schedule needs n > e")
        return math.log(inner)
    m = _SCHEDULE.match(text)
    if m:
        a = float(m.group(2))
        return a if m.group(1) == "constant" else -a
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"unknown c schedule {c!r}") from None


@dataclass(frozen=True)
class ErParams:
    n: int
    r: int = 1
    c: float = 0.0

    @property
    def edge_probability(self) -> EdgeProbability:
        return er_edge_probability(self.n, self.r, self.c)

    @property
    def p(self) -> float:
        return self.edge_probability.p


@dataclass(frozen=True)
class RinParams:
    k: int
    n: int
    r: int = 1
    c: float = 0.0
    intra: tuple[Graph, ...] = field(default=())  # empty tuple means no intra edges

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two communities")
        if self.intra:
            if len(self.intra) != self.k:
                raise ValueError(f"expected {self.k} intra graphs, got {len(self.intra)}")
            for i, g in enumerate(self.intra):
                if g.n != self.n:
                    raise ValueError(f"intra graph {i} has {g.n} nodes, expected {self.n}")
                if g.directed:
                    raise ValueError("intra graphs must be undirected")

    @property
    def edge_probability(self) -> EdgeProbability:
        return rin_edge_probability(self.k, self.n, self.r, self.c)

    @property
    def p(self) -> float:
        return self.edge_probability.p


@dataclass(frozen=True)
class ThresholdDistribution:
    """Distribution of a node threshold on ``{0, ..., r_bar}``."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if not self.probs:
            raise ValueError("distribution needs at least one support point")
        if any(q < 0 or not math.isfinite(q) for q in self.probs):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> ThresholdDistribution:
        total = math.fsum(weights)
        return cls(tuple(w / total for w in weights))

    @property
    def r_bar(self) -> int:
        return len(self.probs) - 1


def default_threshold_weights(n: int, r: int, r_bar: int) -> list[float]:
    """Unnormalized mass: 1 below ``r``, ``(ln n) ** -(t - r + 1)`` from ``r`` to ``r_bar``."""
    if n < 3:
        raise ValueError("needs n >= 3")
    if r < 0 or r_bar < 0:
        raise ValueError("r and r_bar must be nonnegative")
    ln = math.log(n)
    return [1.0 if t < r else ln ** -(t - r + 1) for t in range(r_bar + 1)]


def default_threshold_distribution(n: int, r: int, r_bar: int) -> ThresholdDistribution:
    return ThresholdDistribution.from_weights(default_threshold_weights(n, r, r_bar))


def sample_thresholds(dist: ThresholdDistribution, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. thresholds by inverse CDF on the finite support."""
    cdf = np.cumsum(dist.probs)
    cdf[-1] = 1.0
    u = generator(seed, Stream.THRESHOLDS).random(n)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def _pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, 1)


def sample_er(n: int, p: float, seed: int) -> Graph:
    return _sample_pairs(n, p, seed)


def _sample_pairs(n: int, p, seed: int) -> Graph:
    if np.any(np.asarray(p) < 0) or np.any(np.asarray(p) > 1):
        raise ValueError("probabilities must lie in [0, 1]")
    rows, cols = _pairs(n)
    u = generator(seed, Stream.EDGES).random(rows.size)
    keep = u < p
    return Graph.from_pair_arrays(n, rows[keep], cols[keep])


def edge_probability_matrix(p) -> np.ndarray:
    """Validate a symmetric pair-probability matrix with zero diagonal."""
    m = np.array(p, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("probability matrix must be square")
    if not np.array_equal(m, m.T):
        raise ValueError("probability matrix must be symmetric")
    if np.any(np.diag(m) != 0):
        raise ValueError("probability matrix must have a zero diagonal")
    if np.any(m < 0) or np.any(m > 1) or not np.all(np.isfinite(m)):
        raise ValueError("probabilities must lie in [0, 1]")
    m.flags.writeable = False
    return m


def block_probability_matrix(sizes: Sequence[int], p_intra: float, p_inter: float) -> np.ndarray:
    labels = np.repeat(np.arange(len(sizes)), sizes)
    m = np.where(labels[:, None] == labels[None, :], p_intra, p_inter)
    np.fill_diagonal(m, 0.0)
    return edge_probability_matrix(m)


def sample_heterogeneous(p_matrix, seed: int) -> Graph:
    m = edge_probability_matrix(p_matrix)
    rows, cols = _pairs(m.shape[0])
    return _sample_pairs(m.shape[0], m[rows, cols], seed)


def coupled_pair(p_base: float, p_matrix, seed: int) -> tuple[Graph, Graph]:
    """Monotone coupling of ``G(n, p_base)`` with the heterogeneous model.

    A first coin (probability ``p_base``) puts a pair in both graphs; failing
    that, a second coin with probability ``(p_ij - p_base) / (1 - p_base)``
    adds it to the second graph only. The first graph equals
    ``sample_er(n, p_base, seed)``.
    """
    m = edge_probability_matrix(p_matrix)
    if not 0 <= p_base < 1:
        raise ValueError("p_base must lie in [0, 1)")
    n = m.shape[0]
    rows, cols = _pairs(n)
    pij = m[rows, cols]
    if np.any(pij < p_base):
        raise ValueError("every pair probability must be at least p_base")
    first = generator(seed, Stream.EDGES).random(rows.size) < p_base
    second = generator(seed, Stream.COUPLING).random(rows.size) < (pij - p_base) / (1 - p_base)
    both = first | second
    return (
        Graph.from_pair_arrays(n, rows[first], cols[first]),
        Graph.from_pair_arrays(n, rows[both], cols[both]),
    )


def sample_rin(params: RinParams, seed: int, p: float | None = None) -> Graph:
    """Random interdependent network on ``k * n`` nodes.

    Community ``i`` occupies indices ``[i*n, (i+1)*n)``; its internal edges
    come from ``params.intra[i]`` and every cross-community pair is drawn
    independently with ``params.p``, or with ``p`` when given.
    """
    p = params.p if p is None else p
    if not 0 <= p <= 1:
        raise ValueError("probabilities must lie in [0, 1]")
    k, n = params.k, params.n
    total = k * n
    rows, cols = _pairs(total)
    cross = rows // n != cols // n
    rows_x, cols_x = rows[cross], cols[cross]
    u = generator(seed, Stream.EDGES).random(rows_x.size)
    keep = u < p
    r_parts, c_parts = [rows_x[keep]], [cols_x[keep]]
    for i, g in enumerate(params.intra):
        e = np.array(g.edges(), dtype=np.int64).reshape(-1, 2)
        r_parts.append(e[:, 0] + i * n)
        c_parts.append(e[:, 1] + i * n)
    return Graph.from_pair_arrays(total, np.concatenate(r_parts), np.concatenate(c_parts))


def two_clique_counterexample(n: int) -> tuple[Graph, list[int]]:
    """Two ``n/2``-cliques joined by the perfect matching ``(i, i + n/2)``; all thresholds 1."""
    if n % 2 or n < 4:
        raise GraphError("two-clique counterexample needs an even n >= 4")
    h = n // 2
    edges = [(i, j) for i in range(h) for j in range(i + 1, h)]
    edges += [(i + h, j + h) for i in range(h) for j in range(i + 1, h)]
    edges += [(i, i + h) for i in range(h)]
    return Graph.from_edges(n, edges), [1] * n
