"""Deadline generation: time-indexed LP, θ-rounding, and block feasibility LPs.

Continuous view: interval ``(a, b]`` of the fractional schedule carries its
amount at a uniform rate, so slot ``t`` is the real interval ``(t - 1, t]`` and
a unit flow placed in slot 1 reaches fraction θ at time θ.

Flows with equal endpoints inside one coflow are merged; the time-indexed LP
then bounds the mean completion time of a merged flow by
``sum_t t * x[t, e] <= p_e * c_j``, which has the same optimum as the
per-copy formulation by averaging over copies.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import lp as lpmod
from .model import Instance, format_rational, max_degree, to_rational

# merged flow: (coflow, u, v, multiplicity)
MergedFlow = tuple[int, int, int, int]

THETA_BITS = 64


def merged_flows(instance: Instance) -> list[MergedFlow]:
    out = []
    for j, c in enumerate(instance.coflows):
        for (u, v), p in c.demand().items():
            out.append((j, u, v, p))
    return out


@dataclass(frozen=True)
class DeadlineProfile:
    deadlines: tuple[Fraction, ...]
    releases: tuple[int, ...]
    theta: Fraction | None = None
    order: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        dl = tuple(to_rational(c) for c in self.deadlines)
        object.__setattr__(self, "deadlines", dl)
        if len(self.releases) != len(dl):
            raise ValueError("deadlines and releases differ in length")
        if any(c <= 0 for c in dl):
            raise ValueError("deadlines must be positive")
        object.__setattr__(self, "order", tuple(sorted(range(len(dl)), key=lambda j: (dl[j], j))))

    @classmethod
    def for_instance(cls, instance: Instance, deadlines: Sequence, theta=None) -> "DeadlineProfile":
        return cls(tuple(to_rational(c) for c in deadlines), instance.releases, theta)

    def weighted_sum(self, instance: Instance) -> Fraction:
        return sum((w * c for w, c in zip(instance.weights, self.deadlines)), Fraction(0))

    def to_dict(self) -> dict:
        return {"theta": None if self.theta is None else format_rational(self.theta),
                "deadlines": [format_rational(c) for c in self.deadlines]}


@dataclass(frozen=True)
class FractionalSchedule:
    """Per merged flow, amounts assigned to the intervals ``(bounds[i-1], bounds[i]]``."""

    flows: tuple[MergedFlow, ...]
    bounds: tuple[int, ...]          # 0 = bounds[0] < bounds[1] < ...
    amounts: tuple[tuple[Fraction, ...], ...]
    value: Fraction | None = None    # LP objective

    @property
    def horizon(self) -> int:
        return self.bounds[-1]

    def flows_of(self, j: int) -> list[int]:
        return [k for k, f in enumerate(self.flows) if f[0] == j]


@dataclass
class DeadlineLP:
    lp: lpmod.LinearProgram
    flows: list[MergedFlow]
    bounds: list[int]
    var: dict[tuple[int, int], int]     # (flow, interval) -> column
    completion: list[int]               # coflow -> column of c_j


def _interval_lp(instance: Instance, bounds: list[int]) -> DeadlineLP:
    flows = merged_flows(instance)
    lp = lpmod.LinearProgram()
    var: dict[tuple[int, int], int] = {}
    per_vertex: dict[tuple[int, str, int], list[int]] = {}
    for k, (j, u, v, p) in enumerate(flows):
        rel = instance.coflows[j].release
        for i in range(1, len(bounds)):
            if bounds[i - 1] < rel:
                continue
            length = bounds[i] - bounds[i - 1]
            col = lp.add_variable(min(p, length), f"x[{bounds[i]},{j}:{u}-{v}]")
            var[(k, i)] = col
            per_vertex.setdefault((i, "L", u), []).append(col)
            per_vertex.setdefault((i, "R", v), []).append(col)
    completion = [lp.add_variable(None, f"c[{j}]") for j in range(len(instance))]
    for k, (j, u, v, p) in enumerate(flows):
        cols = {var[(k, i)]: 1 for i in range(1, len(bounds)) if (k, i) in var}
        lp.add_constraint(cols, lpmod.EQ, p, f"assign[{k}]")
        timed = {var[(k, i)]: bounds[i] for i in range(1, len(bounds)) if (k, i) in var}
        timed[completion[j]] = -p
        lp.add_constraint(timed, lpmod.LE, 0, f"finish[{k}]")
    for (i, side, w), cols in per_vertex.items():
        if len(cols) > 1:
            lp.add_constraint({c: 1 for c in cols}, lpmod.LE, bounds[i] - bounds[i - 1],
                              f"match[{bounds[i]},{side}{w}]")
    lp.set_objective({completion[j]: c.weight for j, c in enumerate(instance.coflows)})
    return DeadlineLP(lp, flows, bounds, var, completion)


def horizon(instance: Instance) -> int:
    edges = [f for _, f in instance.all_flows()]
    return max(instance.releases) + 2 * max_degree(edges)


def build_lp_d(instance: Instance) -> DeadlineLP:
    """Time-indexed LP with one interval per slot up to max release + 2Δ."""
    return _interval_lp(instance, list(range(horizon(instance) + 1)))


def interval_points(total: int, epsilon: Fraction, extra: Sequence[int] = ()) -> list[int]:
    """0 followed by the distinct values floor((1+ε)^i) up to the first one >= total."""
    epsilon = to_rational(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    pts = {0}
    power = Fraction(1)
    while True:
        t = math.floor(power)
        pts.add(t)
        if t >= total:
            break
        power *= 1 + epsilon
    pts.update(r for r in extra if 0 < r < max(pts))
    return sorted(pts)


def build_lp_d_intervals(instance: Instance, epsilon) -> DeadlineLP:
    """Interval-indexed LP over geometrically growing intervals.

    Interval ``(t_{i-1}, t_i]`` holds at most its length per vertex and its
    flow is charged at time ``t_i``. Release dates are added as extra points so
    no interval straddles a release.
    """
    pts = interval_points(horizon(instance), epsilon, instance.releases)
    return _interval_lp(instance, pts)


def solve_deadline_lp(dlp: DeadlineLP) -> FractionalSchedule:
    sol = lpmod.solve(dlp.lp)
    if sol.status != lpmod.OPTIMAL:
        raise RuntimeError(f"deadline LP not solved: {sol.status}")
    amounts = []
    for k in range(len(dlp.flows)):
        amounts.append(tuple(sol.values[dlp.var[(k, i)]] if (k, i) in dlp.var else Fraction(0)
                             for i in range(1, len(dlp.bounds))))
    return FractionalSchedule(tuple(dlp.flows), tuple(dlp.bounds), tuple(amounts), sol.objective)


def fractional_schedule(instance: Instance, epsilon=None) -> FractionalSchedule:
    dlp = build_lp_d(instance) if epsilon is None else build_lp_d_intervals(instance, epsilon)
    return solve_deadline_lp(dlp)


# ---------------------------------------------------------------- curves


def _flow_time(frac: FractionalSchedule, k: int, theta: Fraction) -> Fraction:
    """Earliest time at which flow ``k`` has received ``theta * p`` units."""
    p = frac.flows[k][3]
    need = theta * p
    cum = Fraction(0)
    for i, a in enumerate(frac.amounts[k], start=1):
        if a and cum + a >= need:
            lo, hi = frac.bounds[i - 1], frac.bounds[i]
            return lo + (need - cum) * (hi - lo) / a
        cum += a
    raise ValueError("fractional schedule does not complete the flow")


def completion_curve(frac: FractionalSchedule, j: int, theta) -> Fraction:
    """C_j(θ): earliest time every flow of coflow j is θ-complete."""
    theta = to_rational(theta)
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    return max(_flow_time(frac, k, theta) for k in frac.flows_of(j))


def _flow_breaks(frac: FractionalSchedule, k: int) -> list[Fraction]:
    p = frac.flows[k][3]
    cum = Fraction(0)
    out = []
    for a in frac.amounts[k]:
        if a:
            cum += a
            out.append(cum / p)
    return out


def curve_breakpoints(frac: FractionalSchedule, j: int) -> list[Fraction]:
    """θ values in (0, 1] where C_j(·) may change slope, including max crossings."""
    ks = frac.flows_of(j)
    pts = {Fraction(1)}
    for k in ks:
        pts.update(b for b in _flow_breaks(frac, k) if 0 < b <= 1)
    grid = sorted(pts)
    crossings = set()
    lo = Fraction(0)
    for hi in grid:
        if len(ks) > 1 and hi > lo:
            # every flow time is affine on (lo, hi); sample two interior points
            a, b = lo + (hi - lo) / 3, lo + 2 * (hi - lo) / 3
            lines = []
            for k in ks:
                fa, fb = _flow_time(frac, k, a), _flow_time(frac, k, b)
                slope = (fb - fa) / (b - a)
                lines.append((slope, fa - slope * a))
            for x in range(len(lines)):
                for y in range(x + 1, len(lines)):
                    (s1, c1), (s2, c2) = lines[x], lines[y]
                    if s1 != s2:
                        t = (c2 - c1) / (s1 - s2)
                        if lo < t < hi:
                            crossings.add(t)
        lo = hi
    return sorted(pts | crossings)


def curve_integral(frac: FractionalSchedule, j: int) -> Fraction:
    """Exact value of the integral of C_j(θ) over (0, 1].

    C_j is affine between consecutive breakpoints (it may jump at them), so
    each piece contributes its length times the value at its midpoint.
    """
    pts = [Fraction(0)] + curve_breakpoints(frac, j)
    total = Fraction(0)
    for lo, hi in zip(pts, pts[1:]):
        total += completion_curve(frac, j, (lo + hi) / 2) * (hi - lo)
    return total


def expected_deadline_sum(instance: Instance, frac: FractionalSchedule) -> Fraction:
    """E[sum_j w_j C_j(θ)/θ] for θ with density 2θ, which is 2 sum_j w_j ∫ C_j.

    Each flow's own θ-curve integrates to its LP completion term minus 1/2,
    but C_j is the maximum over the coflow's flows, so for coflows with
    several flows this can exceed 2 LP - sum_j w_j.
    """
    return 2 * sum((w * curve_integral(frac, j) for j, w in enumerate(instance.weights)), Fraction(0))


def profile_at(instance: Instance, frac: FractionalSchedule, theta: Fraction) -> DeadlineProfile:
    dl = tuple(completion_curve(frac, j, theta) / theta for j in range(len(instance)))
    return DeadlineProfile(dl, instance.releases, theta)


def _truncated_sqrt(num: int, den: int) -> Fraction:
    """floor(sqrt(num/den) * 2^b) / 2^b for b = THETA_BITS."""
    scale = 1 << THETA_BITS
    return Fraction(math.isqrt(num * scale * scale // den), scale)


def sample_theta(rng: random.Random) -> Fraction:
    """θ with density 2x on (0, 1], truncated to 64 fractional bits."""
    while True:
        k = rng.getrandbits(THETA_BITS)
        theta = _truncated_sqrt(k, 1 << THETA_BITS)
        if theta > 0:
            return theta


def quantile_thetas(count: int) -> list[Fraction]:
    """Deterministic θ_k = sqrt(k / N), k = 1..N."""
    return [_truncated_sqrt(k, count) for k in range(1, count + 1)]


def candidate_thetas(frac: FractionalSchedule, n: int, count: int) -> list[Fraction]:
    pts = set(quantile_thetas(count))
    for j in range(n):
        pts.update(curve_breakpoints(frac, j))
    return sorted(t for t in pts if 0 < t <= 1)


def round_deadlines(instance: Instance, frac: FractionalSchedule, *, seed: int | None = None,
                    candidates: int | None = None) -> DeadlineProfile:
    """Turn a fractional schedule into deadlines C_j = C_j(θ)/θ.

    Exactly one of ``seed`` (draw θ with density 2x) or ``candidates`` (take
    the cheapest profile over N quantiles plus all curve breakpoints) is used.
    """
    if (seed is None) == (candidates is None):
        raise ValueError("pass exactly one of seed= or candidates=")
    if seed is not None:
        return profile_at(instance, frac, sample_theta(random.Random(seed)))
    if candidates < 1:
        raise ValueError("candidate count must be positive")
    best = None
    for theta in candidate_thetas(frac, len(instance), candidates):
        prof = profile_at(instance, frac, theta)
        key = (prof.weighted_sum(instance), theta)
        if best is None or key < best[0]:
            best = (key, prof)
    return best[1]


def generate_deadlines(instance: Instance, mode: str = "candidates:64", epsilon=None) -> DeadlineProfile:
    """Solve the deadline LP and round it; ``mode`` is ``seed:N`` or ``candidates:N``."""
    kind, _, arg = mode.partition(":")
    frac = fractional_schedule(instance, epsilon)
    if kind == "seed":
        return round_deadlines(instance, frac, seed=int(arg or 0))
    if kind == "candidates":
        return round_deadlines(instance, frac, candidates=int(arg or 64))
    raise ValueError(f"unknown deadline mode {mode!r}")


# ---------------------------------------------------------------- block LPs


@dataclass(frozen=True)
class BlockPoint:
    """Fractional flow-to-block assignment witnessing LP I / LP R feasibility."""

    boundaries: tuple[Fraction, ...]                  # 0 = D_0 < D_1 < ...
    assignment: dict = field(default_factory=dict)    # (flow index, block) -> amount
    flows: tuple[MergedFlow, ...] = ()


def _block_lp(instance: Instance, boundaries: list[Fraction], allowed):
    flows = merged_flows(instance)
    lp = lpmod.LinearProgram()
    var: dict[tuple[int, int], int] = {}
    load: dict[tuple[int, str, int], list[int]] = {}
    for k, (j, u, v, p) in enumerate(flows):
        cols = {}
        for s in allowed(j):
            size = boundaries[s] - boundaries[s - 1]
            if size <= 0:
                continue
            col = lp.add_variable(min(Fraction(p), size), f"x[{s},{j}:{u}-{v}]")
            var[(k, s)] = col
            cols[col] = 1
            load.setdefault((s, "L", u), []).append(col)
            load.setdefault((s, "R", v), []).append(col)
        lp.add_constraint(cols, lpmod.EQ, p, f"assign[{k}]")
    for (s, side, w), cols in load.items():
        if len(cols) > 1:
            lp.add_constraint({c: 1 for c in cols}, lpmod.LE, boundaries[s] - boundaries[s - 1],
                              f"load[{s},{side}{w}]")
    return lp, var, flows


def _run_block_lp(instance, boundaries, allowed) -> tuple[bool, BlockPoint | None]:
    lp, var, flows = _block_lp(instance, boundaries, allowed)
    ok, sol = lpmod.feasible(lp)
    if not ok:
        return False, None
    point = {key: sol.values[col] for key, col in var.items() if sol.values[col]}
    return True, BlockPoint(tuple(boundaries), point, tuple(flows))


def check_lp_i(instance: Instance, profile: DeadlineProfile) -> tuple[bool, BlockPoint | None]:
    """Feasibility of the block LP with blocks between consecutive deadlines."""
    if instance.has_releases:
        raise ValueError("instance has release dates; use check_lp_r")
    order = profile.order
    bounds = [Fraction(0)] + [profile.deadlines[j] for j in order]
    position = {j: s for s, j in enumerate(order, start=1)}
    return _run_block_lp(instance, bounds, lambda j: range(1, position[j] + 1))


def release_chain(profile: DeadlineProfile) -> list[Fraction]:
    pts = {Fraction(0)} | set(profile.deadlines) | {Fraction(r) for r in profile.releases}
    return sorted(pts)


def check_lp_r(instance: Instance, profile: DeadlineProfile) -> tuple[bool, BlockPoint | None]:
    """Feasibility of the block LP whose chain merges deadlines and release dates."""
    chain = release_chain(profile)
    idx = {d: s for s, d in enumerate(chain)}

    def allowed(j):
        return range(idx[Fraction(profile.releases[j])] + 1, idx[profile.deadlines[j]] + 1)

    return _run_block_lp(instance, chain, allowed)


def check_profile(instance: Instance, profile: DeadlineProfile) -> bool:
    if instance.has_releases:
        return check_lp_r(instance, profile)[0]
    return check_lp_i(instance, profile)[0]
