"""Exact solvers for desk-scale instances, and the non-integrality fixture.

Optimal schedules can be taken slot-maximal: if an eligible copy could join
slot t, moving a later copy of the same flow into t never hurts. The search
therefore branches over maximal matchings of the released, unfinished flows
and memoises on (slot, remaining demand). Once no release lies ahead the
cost-to-go is shift invariant, so those states are memoised on the remaining
demand alone.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import floor

from .deadlines import DeadlineProfile
from .model import Coflow, CostReport, Flow, Instance, Schedule, cost, max_degree

DEFAULT_LIMIT = 10
FEASIBILITY_LIMIT = 40


class OracleLimitError(ValueError):
    def __init__(self, copies: int, limit: int) -> None:
        self.copies = copies
        self.limit = limit
        super().__init__(f"instance has {copies} edge copies, oracle limit is {limit}")


def _flows(instance: Instance) -> list[tuple[int, int, int, int]]:
    return [(j, u, v, p) for j, c in enumerate(instance.coflows) for (u, v), p in c.demand().items()]


def _maximal_matchings(cands: list[int], ends: list[tuple[int, int]]):
    """All maximal matchings among candidate flow indices (as tuples)."""
    out = []

    def rec(i: int, chosen: list[int], used_l: set, used_r: set) -> None:
        if i == len(cands):
            for k in cands:
                u, v = ends[k]
                if k not in chosen and u not in used_l and v not in used_r:
                    return
            out.append(tuple(chosen))
            return
        k = cands[i]
        u, v = ends[k]
        if u not in used_l and v not in used_r:
            chosen.append(k)
            used_l.add(u)
            used_r.add(v)
            rec(i + 1, chosen, used_l, used_r)
            chosen.pop()
            used_l.discard(u)
            used_r.discard(v)
        rec(i + 1, chosen, used_l, used_r)

    rec(0, [], set(), set())
    return out


def _check_size(instance: Instance, limit: int) -> None:
    if instance.total_copies > limit:
        raise OracleLimitError(instance.total_copies, limit)


def opt(instance: Instance, limit: int = DEFAULT_LIMIT) -> tuple[CostReport, Schedule]:
    """Minimum weighted completion time and an optimal schedule."""
    _check_size(instance, limit)
    flows = _flows(instance)
    ends = [(u, v) for _, u, v, _ in flows]
    owner = [j for j, _, _, _ in flows]
    weights = instance.weights
    releases = instance.releases
    max_rel = max(releases)
    n = len(instance)

    def unfinished(rem) -> list[int]:
        live = [False] * n
        for k, r in enumerate(rem):
            if r:
                live[owner[k]] = True
        return [j for j in range(n) if live[j]]

    def moves(t: int, rem):
        cands = [k for k, r in enumerate(rem) if r and releases[owner[k]] <= t]
        return _maximal_matchings(cands, ends) if cands else []

    @lru_cache(maxsize=None)
    def tail(rem) -> tuple[Fraction, tuple]:
        # cost-to-go minus t * (unfinished weight), valid once t >= max release
        if not any(rem):
            return Fraction(0), ()
        w_now = sum((weights[j] for j in unfinished(rem)), Fraction(0))
        best = None
        for m in moves(max_rel, rem):
            nxt = list(rem)
            for k in m:
                nxt[k] -= 1
            nxt = tuple(nxt)
            val = w_now + tail(nxt)[0]
            if best is None or val < best[0]:
                best = (val, m)
        return best

    @lru_cache(maxsize=None)
    def early(t: int, rem) -> tuple[Fraction, tuple]:
        if t >= max_rel:
            h, m = tail(rem)
            w_now = sum((weights[j] for j in unfinished(rem)), Fraction(0))
            return t * w_now + h, m
        if not any(rem):
            return Fraction(0), ()
        ms = moves(t, rem)
        if not ms:
            # nothing released yet: idle slot
            return early(t + 1, rem)[0], ()
        before = set(unfinished(rem))
        best = None
        for m in ms:
            nxt = list(rem)
            for k in m:
                nxt[k] -= 1
            nxt = tuple(nxt)
            done = before - set(unfinished(nxt))
            val = sum((weights[j] * (t + 1) for j in done), Fraction(0)) + early(t + 1, nxt)[0]
            if best is None or val < best[0]:
                best = (val, m)
        return best

    rem = tuple(p for _, _, _, p in flows)
    slots = {}
    t = 0
    while any(rem):
        _, m = early(t, rem)
        t += 1
        if m:
            slots[t] = [(owner[k],) + ends[k] for k in m]
            nxt = list(rem)
            for k in m:
                nxt[k] -= 1
            rem = tuple(nxt)
    schedule = Schedule.from_slots(slots)
    report = cost(instance, schedule)
    return report, schedule


def opt_bruteforce(instance: Instance, limit: int = 6) -> Fraction:
    """Optimal cost by trying every slot assignment of every copy."""
    _check_size(instance, limit)
    copies = [(j, f.u, f.v) for j, f in instance.expanded().all_flows()]
    horizon = max(instance.releases) + len(copies)
    best = None
    for slots in itertools.product(range(1, horizon + 1), repeat=len(copies)):
        seen = set()
        done = [0] * len(instance)
        ok = True
        for (j, u, v), t in zip(copies, slots):
            if t <= instance.coflows[j].release or ("L", u, t) in seen or ("R", v, t) in seen:
                ok = False
                break
            seen.add(("L", u, t))
            seen.add(("R", v, t))
            done[j] = max(done[j], t)
        if ok:
            val = sum((c.weight * d for c, d in zip(instance.coflows, done)), Fraction(0))
            if best is None or val < best:
                best = val
    return best


def deadline_feasible_integral(instance: Instance, profile: DeadlineProfile,
                               limit: int = FEASIBILITY_LIMIT) -> bool:
    """Does some valid schedule finish every coflow j by slot floor(C_j)?"""
    _check_size(instance, limit)
    flows = _flows(instance)
    ends = [(u, v) for _, u, v, _ in flows]
    owner = [j for j, _, _, _ in flows]
    due = [floor(c) for c in profile.deadlines]
    releases = instance.releases

    @lru_cache(maxsize=None)
    def search(t: int, rem) -> bool:
        if not any(rem):
            return True
        per: dict[int, list] = {}
        for k, r in enumerate(rem):
            if r:
                per.setdefault(owner[k], []).append(ends[k] + (r,))
        for j, edges in per.items():
            if max_degree(edges) > due[j] - max(t, releases[j]):
                return False
        cands = [k for k, r in enumerate(rem) if r and releases[owner[k]] <= t < due[owner[k]]]
        if not cands:
            return search(t + 1, rem)
        for m in _maximal_matchings(cands, ends):
            nxt = list(rem)
            for k in m:
                nxt[k] -= 1
            if search(t + 1, tuple(nxt)):
                return True
        return False

    return search(0, tuple(p for _, _, _, p in flows))


def a1_fixture() -> tuple[Instance, DeadlineProfile]:
    """Four-coflow instance whose block LP is feasible with no integral point.

    Seven vertices per side (0-based here); deadlines (1, 2, 3, 3). The first
    three coflows pin right vertices {1}, {3, 4}, {0, 2} in slots 1, 2, 3.
    """

    def edges(*pairs):
        return tuple(Flow(u - 1, v - 1) for u, v in pairs)

    gadget = [
        edges((6, 2), (7, 7)),
        edges((6, 4), (7, 5)),
        edges((6, 1), (7, 3)),
    ]
    big = edges((1, 1), (2, 1), (3, 3), (4, 3), (1, 4), (3, 4), (2, 5), (4, 5), (2, 2), (3, 2))
    inst = Instance(7, 7, tuple(Coflow(e, 1) for e in gadget + [big]))
    return inst, DeadlineProfile.for_instance(inst, (1, 2, 3, 3))
