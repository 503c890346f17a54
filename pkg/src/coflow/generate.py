"""Reproducible random instances.

Flows are drawn uniformly over vertex pairs, flow counts uniformly from
``1..max_flows`` per coflow, multiplicities from ``1..max_mult``, weights from
``1..10`` and releases from ``0..release_max``.
"""

from __future__ import annotations

import random

from .model import Coflow, Flow, Instance


def random_instance(seed: int, left: int = 3, right: int = 3, coflows: int = 3, max_mult: int = 1,
                    max_flows: int = 3, release_max: int = 0, max_copies: int | None = None) -> Instance:
    if min(left, right, coflows, max_mult, max_flows) < 1 or release_max < 0:
        raise ValueError("sizes must be positive and release_max nonnegative")
    if max_copies is not None and max_copies < coflows:
        raise ValueError("max_copies must allow one copy per coflow")
    rng = random.Random(seed)
    budget = max_copies
    out = []
    for j in range(coflows):
        flows = []
        for _ in range(rng.randint(1, max_flows)):
            p = rng.randint(1, max_mult)
            if budget is not None:
                # keep one copy in reserve for every coflow still to come
                room = budget - (coflows - j - 1)
                if flows and room < 1:
                    break
                p = min(p, room)
                budget -= p
            flows.append(Flow(rng.randrange(left), rng.randrange(right), p))
        weight = rng.randint(1, 10)
        release = rng.randint(0, release_max) if release_max else 0
        out.append(Coflow(tuple(flows), weight, release))
    return Instance(left, right, tuple(out))


def degree_family(degree: int, seed: int, coflows: int = 3) -> Instance:
    """Coflows on pairwise disjoint 2+2 vertex sets, each of maximum degree >= ``degree``.

    No two coflows share a vertex, so each one can finish exactly at its own
    maximum degree and OPT equals sum_j w_j Delta(E_j).
    """
    if degree < 1 or coflows < 1:
        raise ValueError("degree and coflows must be positive")
    rng = random.Random(seed)
    out = []
    for j in range(coflows):
        top = degree + rng.randint(0, degree // 2)
        split = rng.randint(1, top)
        a, b = 2 * j, 2 * j + 1
        flows = [Flow(a, a, split)]
        if top - split:
            flows.append(Flow(a, b, top - split))
        flows.append(Flow(b, b, rng.randint(1, top)))
        out.append(Coflow(tuple(flows), rng.randint(1, 10)))
    return Instance(2 * coflows, 2 * coflows, tuple(out))
