"""Graph representation, structural queries and the JSON graph file format.

Nodes are dense integer indices ``0..n-1``. Every graph stores, for each node
``i``, the sorted tuple of its in-neighbors (nodes ``j`` with an edge
``j -> i``); undirected graphs are stored with both orientations.

Node sets are plain Python ints used as bitmasks (bit ``i`` set means node
``i`` is a member); see :func:`nodeset` and :func:`members`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    """Invalid graph construction or malformed graph file."""


def nodeset(nodes: Iterable[int]) -> int:
    mask = 0
    for v in nodes:
        mask |= 1 << int(v)
    return mask


def members(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def full_set(n: int) -> int:
    return (1 << n) - 1


def complement(mask: int, n: int) -> int:
    return full_set(n) & ~mask


@dataclass(frozen=True)
class Graph:
    """Immutable graph on nodes ``0..n-1`` keyed by in-neighborhoods."""

    n: int
    directed: bool
    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 0:
            raise GraphError("n must be nonnegative")
        if len(self.neighbors) != self.n:
            raise GraphError(f"expected {self.n} neighbor lists, got {len(self.neighbors)}")
        for i, nbrs in enumerate(self.neighbors):
            prev = -1
            for j in nbrs:
                if not 0 <= j < self.n:
                    raise GraphError(f"neighbor {j} of node {i} out of range")
                if j == i:
                    raise GraphError(f"self-loop at node {i}")
                if j <= prev:
                    raise GraphError(f"neighbor list of node {i} not strictly ascending")
                prev = j
        if not self.directed:
            for i, nbrs in enumerate(self.neighbors):
                for j in nbrs:
                    if i not in self.neighbor_masks_set[j]:
                        raise GraphError(f"undirected graph missing reverse of edge ({i}, {j})")

    @cached_property
    def neighbor_masks_set(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(nb) for nb in self.neighbors)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], directed: bool = False) -> Graph:
        """Build a graph from ``(source, target)`` pairs.

        Duplicate edges and self-loops raise :class:`GraphError`. For an
        undirected graph each pair may be given in either orientation, but only
        once.
        """
        incoming: list[set[int]] = [set() for _ in range(n)]
        for e in edges:
            s, t = int(e[0]), int(e[1])
            if not (0 <= s < n and 0 <= t < n):
                raise GraphError(f"edge ({s}, {t}) out of range for n={n}")
            if s == t:
                raise GraphError(f"self-loop at node {s}")
            if s in incoming[t]:
                raise GraphError(f"duplicate edge ({s}, {t})")
            incoming[t].add(s)
            if not directed:
                incoming[s].add(t)
        return cls(n, directed, tuple(tuple(sorted(nb)) for nb in incoming))

    @classmethod
    def from_pair_arrays(cls, n: int, rows: np.ndarray, cols: np.ndarray) -> Graph:
        """Undirected graph from arrays of distinct pairs with ``rows < cols``.

        Bulk constructor for the random generators; skips per-edge validation.
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        src = np.concatenate([rows, cols])
        dst = np.concatenate([cols, rows])
        order = np.lexsort((src, dst))
        src, dst = src[order], dst[order]
        bounds = np.searchsorted(dst, np.arange(n + 1))
        nbrs = tuple(tuple(src[bounds[i]:bounds[i + 1]].tolist()) for i in range(n))
        g = object.__new__(cls)
        object.__setattr__(g, "n", n)
        object.__setattr__(g, "directed", False)
        object.__setattr__(g, "neighbors", nbrs)
        return g

    @classmethod
    def empty(cls, n: int, directed: bool = False) -> Graph:
        return cls(n, directed, tuple(() for _ in range(n)))

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(n, False, tuple(tuple(j for j in range(n) if j != i) for i in range(n)))

    def edges(self) -> list[tuple[int, int]]:
        """Edge list as ``(source, target)``; undirected edges once with source < target."""
        out = []
        for t, nbrs in enumerate(self.neighbors):
            for s in nbrs:
                if self.directed or s < t:
                    out.append((s, t))
        out.sort()
        return out

    @property
    def num_edges(self) -> int:
        total = sum(len(nb) for nb in self.neighbors)
        return total if self.directed else total // 2

    @cached_property
    def neighbor_masks(self) -> tuple[int, ...]:
        """In-neighborhood of each node as a bitmask."""
        return tuple(nodeset(nb) for nb in self.neighbors)

    @cached_property
    def degrees(self) -> np.ndarray:
        d = np.array([len(nb) for nb in self.neighbors], dtype=np.int64)
        d.flags.writeable = False
        return d

    def adjacency_matrix(self) -> sp.csr_matrix:
        """Sparse matrix with entry ``[s, t] = 1`` for every edge ``s -> t``."""
        rows, cols = [], []
        for t, nbrs in enumerate(self.neighbors):
            rows.extend(nbrs)
            cols.extend([t] * len(nbrs))
        data = np.ones(len(rows), dtype=np.int8)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def subgraph_of(self, other: Graph) -> bool:
        """True when every edge of this graph is an edge of ``other`` (same node set)."""
        if self.n != other.n:
            return False
        return all(a <= b for a, b in zip(self.neighbor_masks_set, other.neighbor_masks_set))


def degree(g: Graph, v: int) -> int:
    if not 0 <= v < g.n:
        raise IndexError(f"node {v} out of range for n={g.n}")
    return len(g.neighbors[v])


def min_degree(g: Graph) -> int:
    if g.n < 1:
        raise GraphError("min_degree needs at least one node")
    return int(g.degrees.min())


def is_connected(g: Graph) -> bool:
    """Strong connectivity for directed graphs, ordinary connectivity otherwise."""
    if g.n < 1:
        raise GraphError("is_connected needs at least one node")
    if g.n == 1:
        return True
    ncomp, _ = connected_components(
        g.adjacency_matrix(), directed=g.directed, connection="strong"
    )
    return ncomp == 1


def vertex_connectivity(g: Graph) -> int:
    """Exact vertex connectivity of an undirected graph (``K_n`` gives ``n-1``).

    Uses max-flow minimum vertex cuts; meant for sanity checks, not hot loops.
    """
    import networkx as nx

    if g.directed:
        raise GraphError("vertex_connectivity supports undirected graphs only")
    if g.n < 2:
        raise GraphError("vertex_connectivity needs at least two nodes")
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n))
    nxg.add_edges_from(g.edges())
    return int(nx.node_connectivity(nxg))


# ---------------------------------------------------------------------------
# JSON file format


def _locate(text: str, pos: int) -> str:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return f"line {line}, column {col}"


_EDGE_ITEM = re.compile(r"\[[^\[\]]*\]")


def _edge_positions(text: str) -> list[int]:
    m = re.search(r'"edges"\s*:\s*\[', text)
    if m is None:
        return []
    return [e.start() for e in _EDGE_ITEM.finditer(text, m.end())]


def parse_graph(text: str) -> tuple[Graph, list[int] | None]:
    """Parse graph JSON; returns the graph and the optional ``thresholds`` list.

    Errors carry the line and column of the offending element.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise GraphError("graph file must hold a JSON object")
    n = obj.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise GraphError("field 'n' must be a nonnegative integer")
    directed = obj.get("directed", False)
    if not isinstance(directed, bool):
        raise GraphError("field 'directed' must be a boolean")
    edges = obj.get("edges", [])
    if not isinstance(edges, list):
        raise GraphError("field 'edges' must be an array")

    positions = _edge_positions(text)

    def where(k: int) -> str:
        return _locate(text, positions[k]) if k < len(positions) else f"edges[{k}]"

    seen: set[tuple[int, int]] = set()
    clean = []
    for k, e in enumerate(edges):
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in e)
        ):
            raise GraphError(f"edge {k} at {where(k)}: expected [source, target] integers")
        s, t = e
        if not (0 <= s < n and 0 <= t < n):
            raise GraphError(f"edge {k} at {where(k)}: index out of range for n={n}")
        if s == t:
            raise GraphError(f"edge {k} at {where(k)}: self-loop at node {s}")
        key = (s, t) if directed else (min(s, t), max(s, t))
        if key in seen:
            raise GraphError(f"edge {k} at {where(k)}: duplicate edge ({s}, {t})")
        seen.add(key)
        clean.append((s, t))
    g = Graph.from_edges(n, clean, directed=directed)

    thresholds = obj.get("thresholds")
    if thresholds is not None:
        if (
            not isinstance(thresholds, list)
            or len(thresholds) != n
            or not all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in thresholds)
        ):
            raise GraphError(f"field 'thresholds' must be an array of {n} nonnegative integers")
    return g, thresholds


def dump_graph(g: Graph, thresholds: Sequence[int] | None = None) -> str:
    """Serialize to the graph JSON format (one edge per line, deterministic)."""
    lines = ["{", f'  "n": {g.n},', f'  "directed": {"true" if g.directed else "false"},']
    edges = g.edges()
    if edges:
        body = ",\n".join(f"    [{s}, {t}]" for s, t in edges)
        lines.append(f'  "edges": [\n{body}\n  ]' + ("," if thresholds is not None else ""))
    else:
        lines.append('  "edges": []' + ("," if thresholds is not None else ""))
    if thresholds is not None:
        lines.append(f'  "thresholds": {json.dumps([int(t) for t in thresholds])}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_graph(path) -> tuple[Graph, list[int] | None]:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def save_graph(path, g: Graph, thresholds: Sequence[int] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_graph(g, thresholds))
