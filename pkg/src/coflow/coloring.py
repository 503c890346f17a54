"""Constructive König decomposition of bipartite multigraphs.

The multigraph is padded to a Δ-regular one (dummy vertices and dummy
edges), then perfect matchings of the support graph are peeled off, each
taken as many times as its scarcest edge allows. Every peel removes at least
one distinct edge, so the work depends on the number of distinct edges and
not on the multiplicities.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Iterable

# (key, u, v, multiplicity); key identifies the edge to the caller
WeightedEdge = tuple[Hashable, int, int, int]


@dataclass(frozen=True)
class MatchingDecomposition:
    """``classes`` lists (repeat count, matching) pairs; counts sum to ``degree``."""

    classes: tuple[tuple[int, tuple[WeightedEdge, ...]], ...]
    degree: int

    @property
    def matchings(self) -> list[tuple[WeightedEdge, ...]]:
        """One entry per color; expands the repeat counts."""
        return [m for count, m in self.classes for _ in range(count)]

    def __len__(self) -> int:
        return sum(count for count, _ in self.classes)

    def flatten(self) -> dict[Hashable, int]:
        out: dict[Hashable, int] = defaultdict(int)
        for count, m in self.classes:
            for key, _, _, _ in m:
                out[key] += count
        return dict(out)


def _perfect_matching(adj: dict[int, list[int]], left: list[int]) -> dict[int, int]:
    """Kuhn's augmenting paths; ``adj`` must admit a left-perfect matching."""
    match_right: dict[int, int] = {}

    def augment(u: int, seen: set) -> bool:
        for w in adj[u]:
            if w in seen:
                continue
            seen.add(w)
            if w not in match_right or augment(match_right[w], seen):
                match_right[w] = u
                return True
        return False

    for u in left:
        if not augment(u, set()):
            raise RuntimeError("support graph of a regular multigraph lacks a perfect matching")
    return {a: b for b, a in match_right.items()}


def decompose(edges: Iterable[WeightedEdge]) -> MatchingDecomposition:
    """Partition a bipartite multigraph into exactly Δ matchings."""
    merged: dict[tuple, list] = {}
    order: list[tuple] = []
    for key, u, v, p in edges:
        if p < 0:
            raise ValueError("negative multiplicity")
        if p == 0:
            continue
        k = (key, u, v)
        if k not in merged:
            merged[k] = [key, u, v, 0]
            order.append(k)
        merged[k][3] += p
    if not merged:
        return MatchingDecomposition((), 0)

    left_ids = sorted({m[1] for m in merged.values()})
    right_ids = sorted({m[2] for m in merged.values()})
    lidx = {u: i for i, u in enumerate(left_ids)}
    ridx = {v: i for i, v in enumerate(right_ids)}
    size = max(len(left_ids), len(right_ids))

    deg_l = [0] * size
    deg_r = [0] * size
    # edge slots: (li, ri) -> list of [remaining, original key or None for dummy]
    slots: dict[tuple[int, int], list[list]] = defaultdict(list)
    for k in order:
        key, u, v, p = merged[k]
        li, ri = lidx[u], ridx[v]
        deg_l[li] += p
        deg_r[ri] += p
        slots[(li, ri)].append([p, (key, u, v)])
    delta = max(max(deg_l), max(deg_r))

    # pad to Δ-regular; deficits on both sides sum to the same total
    i = j = 0
    while True:
        while i < size and deg_l[i] == delta:
            i += 1
        while j < size and deg_r[j] == delta:
            j += 1
        if i == size or j == size:
            break
        add = min(delta - deg_l[i], delta - deg_r[j])
        slots[(i, j)].append([add, None])
        deg_l[i] += add
        deg_r[j] += add

    classes = []
    remaining = delta
    while remaining:
        adj: dict[int, list[int]] = defaultdict(list)
        for (li, ri), lst in sorted(slots.items()):
            if any(s[0] for s in lst):
                adj[li].append(ri)
        match = _perfect_matching(adj, list(range(size)))
        chosen = []
        for li in range(size):
            ri = match[li]
            slot = next(s for s in slots[(li, ri)] if s[0])
            chosen.append(slot)
        count = min(s[0] for s in chosen)
        for s in chosen:
            s[0] -= count
        real = tuple(sorted(((s[1][0], s[1][1], s[1][2], 1) for s in chosen if s[1] is not None),
                            key=lambda e: (e[1], e[2])))
        classes.append((count, real))
        remaining -= count
        for key in [k for k, lst in slots.items() if not any(s[0] for s in lst)]:
            del slots[key]
    return MatchingDecomposition(tuple(classes), delta)
