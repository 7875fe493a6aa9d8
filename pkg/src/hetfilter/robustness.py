"""Exact (T+1)-reachability and (T+1)-robustness checks.

A node set ``S`` is reachable when some member ``i`` has at least ``t_i + 1``
in-neighbors outside ``S``. A graph is robust when no two disjoint nonempty
sets are both non-reachable; that is exactly the condition under which the
filtering dynamics reach consensus from every initial state.

Deciding robustness is exponential in ``n``. :func:`is_robust_exact`
enumerates all ``2**n`` subsets with numpy and is capped at 24 nodes;
:func:`certify_robust_halfsize` is a one-sided branch-and-bound certificate
capped at 30 nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph, members

EXACT_CAP = 24
HALFSIZE_CAP = 30


class CapExceeded(ValueError):
    """Node count above the enumeration cap of an exponential routine."""


def as_thresholds(g: Graph, thresholds: Sequence[int]) -> np.ndarray:
    """Validate a threshold assignment for ``g`` and return it as an int array."""
    t = np.asarray(thresholds)
    if t.shape != (g.n,):
        raise ValueError(f"expected {g.n} thresholds, got shape {t.shape}")
    if t.size and not np.issubdtype(t.dtype, np.integer):
        if not np.all(np.equal(np.mod(t, 1), 0)):
            raise ValueError("thresholds must be integers")
    t = t.astype(np.int64)
    if t.size and (t.min() < 0 or t.max() > g.n - 1):
        raise ValueError(f"thresholds must lie in [0, {g.n - 1}]")
    return t


@dataclass(frozen=True)
class RobustnessVerdict:
    robust: bool
    witness: tuple[int, int] | None = None
    method: str = "exact"

    def to_json(self) -> dict:
        return {
            "robust": self.robust,
            "witness": None if self.witness is None else [members(s) for s in self.witness],
            "method": self.method,
        }


@dataclass(frozen=True)
class HalfsizeCertificate:
    """Outcome of :func:`certify_robust_halfsize`.

    ``certified`` implies robustness. Otherwise ``inconclusive_set`` is a
    non-reachable set of size at most ``n // 2``, which does not by itself
    disprove robustness.
    """

    certified: bool
    inconclusive_set: int | None = None


def is_reachable(g: Graph, thresholds: Sequence[int], s: int) -> bool:
    if s == 0:
        raise ValueError("reachability is undefined for the empty set")
    if s >> g.n:
        raise ValueError("node set has members outside the graph")
    t = as_thresholds(g, thresholds)
    masks = g.neighbor_masks
    for i in members(s):
        if (masks[i] & ~s).bit_count() >= t[i] + 1:
            return True
    return False


def _check_cap(g: Graph, cap: int, what: str) -> None:
    if g.n > cap:
        raise CapExceeded(f"n exceeds {what} cap {cap}")


def _nonreachable_table(g: Graph, t: np.ndarray) -> np.ndarray:
    """Boolean array over all ``2**n`` masks: True where the set is nonempty and not reachable."""
    n = g.n
    size = 1 << n
    table = np.ones(size, dtype=bool)
    table[0] = False
    chunk = 1 << 20
    nbr = [np.uint32(m) for m in g.neighbor_masks]
    for start in range(0, size, chunk):
        masks = np.arange(start, min(size, start + chunk), dtype=np.uint32)
        inv = ~masks
        ok = table[start:start + len(masks)]
        for i in range(n):
            outside = np.bitwise_count(nbr[i] & inv)
            member = ((masks >> np.uint32(i)) & np.uint32(1)).astype(bool)
            ok &= ~member | (outside <= t[i])
    return table


def non_reachable_sets(g: Graph, thresholds: Sequence[int], max_n: int = EXACT_CAP) -> list[int]:
    """All nonempty non-reachable node sets, as bitmasks in ascending order."""
    _check_cap(g, max_n, "enumeration")
    t = as_thresholds(g, thresholds)
    return np.flatnonzero(_nonreachable_table(g, t)).tolist()


def _any_subset(table: np.ndarray, n: int) -> np.ndarray:
    """``out[m]`` is True when some submask of ``m`` is marked in ``table``."""
    out = table.copy()
    for b in range(n):
        view = out.reshape(-1, 2, 1 << b)
        view[:, 1, :] |= view[:, 0, :]
    return out


def is_robust_exact(g: Graph, thresholds: Sequence[int]) -> RobustnessVerdict:
    """Decide robustness exactly.

    When not robust, the witness is the lexicographically least pair
    ``(S1, S2)`` with ``S1 < S2`` as integers.
    """
    _check_cap(g, EXACT_CAP, "exact-check")
    t = as_thresholds(g, thresholds)
    if g.n < 2:
        return RobustnessVerdict(True)
    table = _nonreachable_table(g, t)
    # complement of mask m inside the full set is full - m, i.e. the reversed index
    has_partner = table & _any_subset(table, g.n)[::-1]
    hits = np.flatnonzero(has_partner)
    if hits.size == 0:
        return RobustnessVerdict(True)
    s1 = int(hits[0])
    masks = np.arange(table.size, dtype=np.uint32)
    s2 = int(np.flatnonzero(table & ((masks & np.uint32(s1)) == 0))[0])
    return RobustnessVerdict(False, (s1, s2))


def is_robust_naive(g: Graph, thresholds: Sequence[int]) -> RobustnessVerdict:
    """Reference checker: direct double loop over set pairs. Small ``n`` only."""
    t = [int(x) for x in as_thresholds(g, thresholds)]
    if g.n > 12:
        raise CapExceeded("n exceeds naive-check cap 12")

    def reachable(s: int) -> bool:
        for i in range(g.n):
            if s >> i & 1:
                outside = sum(1 for j in g.neighbors[i] if not s >> j & 1)
                if outside >= t[i] + 1:
                    return True
        return False

    total = 1 << g.n
    for s1 in range(1, total):
        if reachable(s1):
            continue
        for s2 in range(s1 + 1, total):
            if s1 & s2:
                continue
            if not reachable(s2):
                return RobustnessVerdict(False, (s1, s2))
    return RobustnessVerdict(True)


def certify_robust_halfsize(g: Graph, thresholds: Sequence[int]) -> HalfsizeCertificate:
    """Certify robustness by showing every nonempty set of size <= n//2 is reachable.

    Of two disjoint nonempty sets one has at most half the nodes, so the
    certificate is sound. Searches node indices from high to low, excluding
    before including, so the first non-reachable set found is the numerically
    smallest one of admissible size.
    """
    _check_cap(g, HALFSIZE_CAP, "halfsize")
    t = [int(x) for x in as_thresholds(g, thresholds)]
    n = g.n
    k = n // 2
    if k == 0:
        return HalfsizeCertificate(True)
    nbr = g.neighbor_masks

    def search(v: int, s: int, decided: int, size: int) -> int | None:
        # nodes above v are decided; s holds the included ones
        if v < 0:
            return s if size else None
        now = decided | (1 << v)
        if _feasible(s, now, size, v - 1):
            found = search(v - 1, s, now, size)
            if found is not None:
                return found
        if size < k:
            s2 = s | (1 << v)
            if _feasible(s2, now, size + 1, v - 1):
                return search(v - 1, s2, now, size + 1)
        return None

    def _feasible(s: int, decided: int, size: int, v: int) -> bool:
        undecided = ((1 << (v + 1)) - 1) & ~decided
        room = k - size
        for i in members(s):
            fixed_out = (nbr[i] & decided & ~s).bit_count()
            free = (nbr[i] & undecided).bit_count()
            if fixed_out + max(0, free - room) > t[i]:
                return False
        return True

    found = search(n - 1, 0, 0, 0)
    if found is None:
        return HalfsizeCertificate(True)
    return HalfsizeCertificate(False, found)


__all__ = [
    "EXACT_CAP",
    "HALFSIZE_CAP",
    "CapExceeded",
    "HalfsizeCertificate",
    "RobustnessVerdict",
    "as_thresholds",
    "certify_robust_halfsize",
    "is_reachable",
    "is_robust_exact",
    "is_robust_naive",
    "non_reachable_sets",
]
