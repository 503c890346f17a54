"""Greedy edge allocation in deadline order.

Coflows are taken by deadline (ties by input index) and each edge copy goes to
the earliest slot after its release in which both endpoints are free. With a
block-LP feasible profile every coflow finishes by ``r_j + 2 C_j - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .coloring import decompose
from .deadlines import DeadlineProfile, check_lp_i, check_lp_r
from .model import (BoundViolation, Instance, PreconditionError, Run, Schedule,
                    completion_times)


@dataclass(frozen=True)
class GreedyTrace:
    """``placements`` holds (coflow, u, v, slot) per copy in placement order."""

    placements: tuple[tuple[int, int, int, int], ...]
    finish: tuple[int, ...]


def _require(instance: Instance, profile: DeadlineProfile, releases: bool) -> None:
    if releases:
        ok = check_lp_r(instance, profile)[0]
    else:
        if instance.has_releases:
            raise PreconditionError("instance has release dates; use greedy_r")
        ok = check_lp_i(instance, profile)[0]
    if not ok:
        raise PreconditionError("deadline profile fails the block LP check")


def _first_free(busy: int, start: int) -> int:
    """Lowest bit position >= start that is clear in ``busy``."""
    free = ~(busy >> start)
    return start + ((free & -free).bit_length() - 1)


def _audit(instance: Instance, profile: DeadlineProfile, finish) -> None:
    for j, f in enumerate(finish):
        bound = instance.coflows[j].release + 2 * profile.deadlines[j] - 1
        if f > bound:
            raise BoundViolation(f"coflow {j} finishes at {f} > {bound}")


def _greedy(instance: Instance, profile: DeadlineProfile) -> tuple[Schedule, GreedyTrace]:
    # bit t of busy_l[u] set means u is used in slot t
    busy_l = [0] * instance.left_count
    busy_r = [0] * instance.right_count
    slots: dict[int, list] = {}
    placements = []
    for j in profile.order:
        c = instance.coflows[j]
        for f in c.flows:
            for _ in range(f.multiplicity):
                t = _first_free(busy_l[f.u] | busy_r[f.v], c.release + 1)
                busy_l[f.u] |= 1 << t
                busy_r[f.v] |= 1 << t
                slots.setdefault(t, []).append((j, f.u, f.v))
                placements.append((j, f.u, f.v, t))
    schedule = Schedule.from_slots(slots)
    finish = completion_times(instance, schedule)
    _audit(instance, profile, finish)
    return schedule, GreedyTrace(tuple(placements), finish)


def greedy(instance: Instance, profile: DeadlineProfile, check: bool = True) -> tuple[Schedule, GreedyTrace]:
    """Greedy without release dates; finish_j <= 2 C_j - 1 is asserted."""
    if check:
        _require(instance, profile, releases=False)
    elif instance.has_releases:
        raise PreconditionError("instance has release dates; use greedy_r")
    return _greedy(instance, profile)


def greedy_r(instance: Instance, profile: DeadlineProfile, check: bool = True) -> tuple[Schedule, GreedyTrace]:
    """Greedy respecting release dates; finish_j <= r_j + 2 C_j - 1 is asserted."""
    if check:
        _require(instance, profile, releases=True)
    return _greedy(instance, profile)


def greedy_multiplicity(instance: Instance, profile: DeadlineProfile, check: bool = True) -> Schedule:
    """Set-based greedy whose running time does not depend on multiplicities.

    Set ``i`` starts as coflow ``order[i]``'s remaining demand. Each flow first
    tops up earlier sets as far as their maximum degree allows, and the rest
    stays in its own set. Sets are then laid out back to back, each colored
    into exactly its maximum degree many slots.
    """
    if instance.has_releases:
        raise PreconditionError("greedy_multiplicity does not handle release dates")
    if check:
        _require(instance, profile, releases=False)
    sets: list[list[tuple[int, int, int, int]]] = []
    deg: list[dict] = []
    delta: list[int] = []
    for j in profile.order:
        own: list[tuple[int, int, int, int]] = []
        own_deg: dict = {}
        for f in instance.coflows[j].flows:
            p = f.multiplicity
            for i in range(len(sets)):
                if not p:
                    break
                room = min(delta[i] - deg[i].get(("L", f.u), 0), delta[i] - deg[i].get(("R", f.v), 0))
                take = min(room, p)
                if take > 0:
                    sets[i].append((j, f.u, f.v, take))
                    deg[i][("L", f.u)] = deg[i].get(("L", f.u), 0) + take
                    deg[i][("R", f.v)] = deg[i].get(("R", f.v), 0) + take
                    p -= take
            if p:
                own.append((j, f.u, f.v, p))
                own_deg[("L", f.u)] = own_deg.get(("L", f.u), 0) + p
                own_deg[("R", f.v)] = own_deg.get(("R", f.v), 0) + p
        sets.append(own)
        deg.append(own_deg)
        delta.append(max(own_deg.values(), default=0))

    runs = []
    offset = 0
    for edges in sets:
        dec = decompose(((j, u, v, p) for j, u, v, p in edges))
        for count, matching in dec.classes:
            runs.append(Run(offset, count, tuple((j, u, v) for j, u, v, _ in matching)))
            offset += count
    schedule = Schedule(tuple(runs))
    _audit(instance, profile, completion_times(instance, schedule))
    return schedule
