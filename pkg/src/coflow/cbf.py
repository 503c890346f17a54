"""Iterated-rounding block allocation: CBF, its release variant, and CKBF.

Deadlines are rounded up onto a lattice ``{lam + i * tau}``, the gaps between
distinct rounded deadlines become blocks, and edges are assigned to blocks by
iterated LP rounding. A degree constraint is dropped once at most three of its
variables are still fractional, so every block's load exceeds its size by at
most two. Each block is then colored into as many slots as its maximum load.

High multiplicities are handled in two stages: a vertex of the merged-flow LP
fixes the integral part of every (flow, block) amount, and only the leftover
fractional demand, at most one copy per block a flow touches, goes through
the unit-copy rounding loop.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import lp as lpmod
from .coloring import decompose
from .deadlines import DeadlineProfile, MergedFlow, check_lp_i, check_lp_r, merged_flows
from .model import (BoundViolation, Instance, PreconditionError, Run, Schedule,
                    completion_times, cost)

log = logging.getLogger(__name__)

# constraints with fewer fractional incident variables than this are dropped
K = 4

# (block, side, vertex) with side "L" or "R"
DegreeKey = tuple[int, str, int]


class RoundingAuditError(AssertionError):
    """The rounding loop broke one of its invariants."""


def offsets(tau: int) -> tuple[int, ...]:
    """The trial offsets 0, 2, ..., tau - 1, tau + 1."""
    return (0,) + tuple(range(2, tau)) + (tau + 1,)


def _check_params(tau: int, lam: int) -> None:
    if tau < 2:
        raise ValueError("tau must be at least 2")
    if lam not in offsets(tau):
        raise ValueError(f"offset {lam} not in {offsets(tau)}")


def _lattice_ceil(x: Fraction, tau: int, lam: int) -> int:
    """Smallest lam + i * tau (i >= 0) that is >= x."""
    if x <= lam:
        return lam if lam > 0 else tau * max(1, math.ceil(x / tau))
    return lam + tau * math.ceil((x - lam) / tau)


def _lattice_above(x: Fraction, tau: int, lam: int) -> int:
    """Smallest lam + i * tau (i >= 0) strictly greater than x."""
    if x < lam:
        return lam
    return lam + tau * (math.floor((x - lam) / tau) + 1)


@dataclass(frozen=True)
class BlockStructure:
    """Blocks ``(boundaries[b-1], boundaries[b]]`` for ``b = 1..m``.

    Coflow ``j`` may use blocks ``first_block[j] .. deadline_block[j]``.
    """

    tau: int
    lam: int
    boundaries: tuple[int, ...]
    deadline_block: tuple[int, ...]
    first_block: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.boundaries[0] != 0 or any(a >= b for a, b in zip(self.boundaries, self.boundaries[1:])):
            raise ValueError("block boundaries must start at 0 and increase")
        for f, d in zip(self.first_block, self.deadline_block):
            if not 1 <= f <= d < len(self.boundaries):
                raise ValueError("coflow has no admissible block")

    @property
    def count(self) -> int:
        return len(self.boundaries) - 1

    @property
    def sizes(self) -> tuple[int, ...]:
        """Nominal sizes, indexed from block 1 (index 0 unused)."""
        return (0,) + tuple(b - a for a, b in zip(self.boundaries, self.boundaries[1:]))

    def start(self, b: int) -> int:
        return self.boundaries[b - 1]

    def rounded_deadline(self, j: int) -> int:
        return self.boundaries[self.deadline_block[j]]

    def allowed(self, j: int) -> range:
        return range(self.first_block[j], self.deadline_block[j] + 1)


def _structure(tau: int, lam: int, deadlines: list[int], releases: list[int]) -> BlockStructure:
    points = {0, *deadlines, *releases}
    if lam:
        points.add(lam)
    bounds = tuple(sorted(points))
    idx = {p: i for i, p in enumerate(bounds)}
    return BlockStructure(tau, lam, bounds,
                          tuple(idx[d] for d in deadlines),
                          tuple(idx[r] + 1 for r in releases))


def build_blocks(profile: DeadlineProfile, tau: int, lam: int = 0) -> BlockStructure:
    """Round every deadline up onto ``{lam + i * tau}`` and merge equal values."""
    _check_params(tau, lam)
    rounded = [_lattice_ceil(c, tau, lam) for c in profile.deadlines]
    return _structure(tau, lam, rounded, [0] * len(rounded))


def exact_blocks(profile: DeadlineProfile) -> BlockStructure:
    """Blocks at the integer ceilings of the deadlines (and at the releases).

    The rounding guarantee only needs integral block boundaries, and these
    blocks are as tight as the profile allows, which makes them the natural
    stress case for :func:`iterated_round`.
    """
    rounded = [math.ceil(c) for c in profile.deadlines]
    return _structure(1, 0, rounded, list(profile.releases))


def round_for_release(profile: DeadlineProfile, tau: int, lam: int = 0) -> BlockStructure:
    """Releases up to a multiple of tau, deadlines to the second lattice point above them.

    With ``lam = 0`` a deadline ``k * tau + a``, ``0 <= a < tau``, becomes
    ``(k + 2) * tau``; an exact multiple still moves up by two steps.
    """
    _check_params(tau, lam)
    rounded = [_lattice_above(c, tau, lam) + tau for c in profile.deadlines]
    rel = [tau * math.ceil(Fraction(r, tau)) for r in profile.releases]
    return _structure(tau, lam, rounded, rel)


@dataclass
class RoundingAudit:
    """Per-iteration record of the rounding loop; ``records`` are JSON-ready dicts."""

    records: list[dict] = field(default_factory=list)
    max_violation: int = 0

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)


@dataclass(frozen=True)
class BlockAssignment:
    """Integral copies per (merged flow index, block) and realized block loads."""

    blocks: BlockStructure
    flows: tuple[MergedFlow, ...]
    counts: dict
    realized: tuple[int, ...]
    audit: RoundingAudit

    def block_edges(self, b: int) -> list[tuple[int, int, int, int]]:
        return [(self.flows[k][0], self.flows[k][1], self.flows[k][2], n)
                for (k, bb), n in sorted(self.counts.items()) if bb == b and n]


def _loads(flows, counts, nblocks) -> dict[DegreeKey, int]:
    load: dict[DegreeKey, int] = {}
    for (k, b), n in counts.items():
        if n:
            _, u, v, _ = flows[k]
            load[(b, "L", u)] = load.get((b, "L", u), 0) + n
            load[(b, "R", v)] = load.get((b, "R", v), 0) + n
    return load


def _keys(b: int, u: int, v: int) -> tuple[DegreeKey, DegreeKey]:
    return (b, "L", u), (b, "R", v)


def iterated_round(instance: Instance, blocks: BlockStructure) -> BlockAssignment:
    """Integral edge-to-block assignment with every block load at most size + 2."""
    flows = merged_flows(instance)
    sizes = blocks.sizes
    audit = RoundingAudit()

    # stage one: merged flows, keep the integral part of a vertex solution
    lp = lpmod.LinearProgram()
    var: dict[tuple[int, int], int] = {}
    incident: dict[DegreeKey, dict[int, int]] = {}
    for k, (j, u, v, p) in enumerate(flows):
        cols = {}
        for b in blocks.allowed(j):
            col = lp.add_variable(p, f"x[{k},{b}]")
            var[(k, b)] = col
            cols[col] = 1
            for key in _keys(b, u, v):
                incident.setdefault(key, {})[col] = 1
        lp.add_constraint(cols, lpmod.EQ, p, f"assign[{k}]")
    for key, cols in sorted(incident.items()):
        lp.add_constraint(cols, lpmod.LE, sizes[key[0]], f"load[{key}]")
    ok, sol = lpmod.feasible(lp)
    if not ok:
        raise PreconditionError("block allocation LP is infeasible for these rounded deadlines")

    counts = {kb: math.floor(sol.values[col]) for kb, col in var.items()}
    fixed_load = _loads(flows, counts, blocks.count)
    # stage two: one unit copy per leftover unit of demand
    free: set[tuple[int, int]] = set()    # (copy id, block)
    copy_flow: list[int] = []
    for k, (j, u, v, p) in enumerate(flows):
        rest = p - sum(counts[(k, b)] for b in blocks.allowed(j))
        for _ in range(rest):
            c = len(copy_flow)
            copy_flow.append(k)
            free.update((c, b) for b in blocks.allowed(j))
    audit.records.append({"stage": "merged", "variables": len(var), "copies": len(copy_flow)})

    def incident_free() -> dict[DegreeKey, list[tuple[int, int]]]:
        out: dict[DegreeKey, list] = {}
        for c, b in free:
            _, u, v, _ = flows[copy_flow[c]]
            for key in _keys(b, u, v):
                out.setdefault(key, []).append((c, b))
        return out

    active = set(incident_free())
    iteration = 0
    while free:
        iteration += 1
        inc = incident_free()
        order = sorted(free)
        col = {cb: i for i, cb in enumerate(order)}
        lp = lpmod.LinearProgram()
        for cb in order:
            lp.add_variable(1, f"y[{cb[0]},{cb[1]}]")
        by_copy: dict[int, list[int]] = {}
        for c, b in order:
            by_copy.setdefault(c, []).append(col[(c, b)])
        for c, cols in by_copy.items():
            lp.add_constraint({i: 1 for i in cols}, lpmod.EQ, 1, f"copy[{c}]")
        rows = sorted(active)
        moved = None
        if len(by_copy) + len(rows) >= len(free) and rows:
            moved = rows[0]
            rows = rows[1:]
            lp.set_objective({col[cb]: 1 for cb in inc.get(moved, [])})
        for key in rows:
            lp.add_constraint({col[cb]: 1 for cb in inc[key]}, lpmod.LE,
                              sizes[key[0]] - fixed_load.get(key, 0), f"load[{key}]")
        sol = lpmod.solve(lp)
        if not sol.ok:
            raise RoundingAuditError(f"rounding LP became {sol.status} at iteration {iteration}")
        if moved is not None:
            lhs = sum((sol.values[col[cb]] for cb in inc.get(moved, [])), Fraction(0))
            if lhs > sizes[moved[0]] - fixed_load.get(moved, 0):
                raise RoundingAuditError(f"objective-shifted constraint {moved} violated")

        newly = [cb for cb in order if sol.values[col[cb]].denominator == 1]
        if iteration > 1 and not newly:
            raise RoundingAuditError(f"iteration {iteration} fixed no variable")
        for c, b in newly:
            free.discard((c, b))
            if sol.values[col[(c, b)]] == 1:
                k = copy_flow[c]
                counts[(k, b)] += 1
                _, u, v, _ = flows[k]
                for key in _keys(b, u, v):
                    fixed_load[key] = fixed_load.get(key, 0) + 1

        inc = incident_free()
        dropped = []
        for key in sorted(active):
            n = len(inc.get(key, ()))
            if n < K:
                dropped.append([key[0], key[1], key[2], n])
                active.discard(key)
        if any(d[3] > K - 1 for d in dropped):
            raise RoundingAuditError("dropped a constraint with too many fractional variables")
        live_copies = len({c for c, _ in free})
        if len(active) + live_copies > len(free):
            raise RoundingAuditError("counting invariant failed")
        audit.records.append({
            "iteration": iteration, "fixed": len(newly), "fractional": len(free),
            "constraints": len(active), "fractional_edges": live_copies,
            "moved": list(moved) if moved else None, "dropped": dropped,
        })

    load = _loads(flows, counts, blocks.count)
    worst = max((n - sizes[key[0]] for key, n in load.items()), default=0)
    audit.max_violation = max(worst, 0)
    if worst > K - 2:
        raise RoundingAuditError(f"block load exceeds size by {worst}")
    for k, (j, u, v, p) in enumerate(flows):
        if sum(counts[(k, b)] for b in blocks.allowed(j)) != p:
            raise RoundingAuditError(f"flow {k} not fully assigned")
    realized = [0] * (blocks.count + 1)
    for (b, _, _), n in load.items():
        realized[b] = max(realized[b], n)
    audit.records.append({"final": True, "max_violation": audit.max_violation})
    return BlockAssignment(blocks, tuple(flows), {kb: n for kb, n in counts.items() if n},
                           tuple(realized), audit)


def schedule_blocks(instance: Instance, assignment: BlockAssignment, start_offset: int = 0) -> Schedule:
    """Lay blocks out in order, each starting no earlier than its nominal start."""
    runs = []
    end = start_offset
    blocks = assignment.blocks
    for b in range(1, blocks.count + 1):
        edges = assignment.block_edges(b)
        if not edges:
            continue
        start = max(end, start_offset + blocks.start(b))
        dec = decompose(edges)
        t = start
        for count, matching in dec.classes:
            runs.append(Run(t, count, tuple((j, u, v) for j, u, v, _ in matching)))
            t += count
        end = t
    return Schedule(tuple(runs))


@dataclass(frozen=True)
class Trial:
    lam: int
    schedule: Schedule
    cost: Fraction
    assignment: BlockAssignment


@dataclass(frozen=True)
class CBFResult:
    """Cheapest trial (ties go to the smaller offset) plus every trial run."""

    schedule: Schedule
    cost: Fraction
    lam: int
    trials: tuple[Trial, ...]


def _weighted_check(instance: Instance, finish, bound_of, name: str) -> None:
    got = sum((w * f for w, f in zip(instance.weights, finish)), Fraction(0))
    bound = sum((w * bound_of(j) for j, w in enumerate(instance.weights)), Fraction(0))
    if got > bound:
        raise BoundViolation(f"{name}: weighted finish {got} exceeds {bound}")


def _trials(instance, profile, tau, structure_of, per_coflow) -> CBFResult:
    trials = []
    for lam in offsets(tau):
        blocks = structure_of(profile, tau, lam)
        assignment = iterated_round(instance, blocks)
        schedule = schedule_blocks(instance, assignment)
        report = cost(instance, schedule)
        if lam == 0:
            for j, f in enumerate(report.completion):
                bound = per_coflow(j)
                if f > bound:
                    raise BoundViolation(f"coflow {j} finishes at {f} > {bound} (tau={tau})")
        trials.append(Trial(lam, schedule, report.total, assignment))
    best = min(trials, key=lambda t: (t.cost, t.lam))
    return CBFResult(best.schedule, best.cost, best.lam, tuple(trials))


def cbf(instance: Instance, profile: DeadlineProfile, tau: int, check: bool = True) -> CBFResult:
    """Best of all offsets; asserts the per-coflow bound at offset 0 and the weighted bound."""
    if instance.has_releases:
        raise PreconditionError("instance has release dates; use cbf_r")
    if check and not check_lp_i(instance, profile)[0]:
        raise PreconditionError("deadline profile fails the block LP check")
    c = profile.deadlines
    slope = Fraction(tau + 2, tau)
    result = _trials(instance, profile, tau, build_blocks, lambda j: slope * c[j] + tau + 2)
    _weighted_check(instance, completion_times(instance, result.schedule),
                    lambda j: slope * c[j] + Fraction(tau, 2) + Fraction(5, 2) - Fraction(2, tau), "cbf")
    return result


def cbf_r(instance: Instance, profile: DeadlineProfile, tau: int, check: bool = True) -> CBFResult:
    """Release-date variant; per-coflow bound +2 tau + 4 at offset 0, weighted bound on the result."""
    if check and not check_lp_r(instance, profile)[0]:
        raise PreconditionError("deadline profile fails the release block LP check")
    c = profile.deadlines
    slope = Fraction(tau + 2, tau)
    result = _trials(instance, profile, tau, round_for_release, lambda j: slope * c[j] + 2 * tau + 4)
    finish = completion_times(instance, result.schedule)
    _weighted_check(instance, finish,
                    lambda j: slope * c[j] + Fraction(3 * tau, 2) + Fraction(9, 2) - Fraction(2, tau), "cbf_r")
    zero = result.trials[0]
    for j, f in enumerate(completion_times(instance, zero.schedule)):
        if f > slope * c[j] + 2 * tau + 2:
            log.info("cbf_r offset 0: coflow %d finishes at %d, above (tau+2)/tau*C + 2tau + 2", j, f)
    return result


@dataclass(frozen=True)
class CKBFResult:
    schedule: Schedule
    cost: Fraction
    prefix: tuple[int, ...]
    rest: CBFResult | None


def ckbf(instance: Instance, profile: DeadlineProfile, tau: int, b: int, check: bool = True) -> CKBFResult:
    """Coflows with C_j < b + 1 in slots 1..b by coloring, the rest by cbf shifted by b."""
    if b < 1:
        raise ValueError("b must be at least 1")
    if instance.has_releases:
        raise PreconditionError("ckbf does not handle release dates")
    if check and not check_lp_i(instance, profile)[0]:
        raise PreconditionError("deadline profile fails the block LP check")
    c = profile.deadlines
    prefix = tuple(j for j in range(len(instance)) if c[j] < b + 1)
    rest = tuple(j for j in range(len(instance)) if c[j] >= b + 1)
    edges = [(j, u, v, p) for j in prefix for (u, v), p in instance.coflows[j].demand().items()]
    dec = decompose(edges)
    if dec.degree > b:
        raise PreconditionError(f"coflows with deadline below {b + 1} have degree {dec.degree} > {b}")
    runs, t = [], 0
    for count, matching in dec.classes:
        runs.append(Run(t, count, tuple((j, u, v) for j, u, v, _ in matching)))
        t += count
    schedule = Schedule(tuple(runs))
    inner = None
    if rest:
        sub = instance.subinstance(rest)
        sub_profile = DeadlineProfile.for_instance(sub, [c[j] for j in rest])
        inner = cbf(sub, sub_profile, tau, check=False)
        schedule = schedule + inner.schedule.shifted(b).relabeled(dict(enumerate(rest)))
    report = cost(instance, schedule)
    slope = Fraction(tau + 2, tau)
    _weighted_check(instance, report.completion,
                    lambda j: Fraction(b) if c[j] < b + 1 else
                    slope * c[j] + Fraction(tau, 2) + Fraction(5, 2) + b - Fraction(2, tau), "ckbf")
    return CKBFResult(schedule, report.total, prefix, inner)
