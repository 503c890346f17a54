"""Allocator portfolios and the large-degree bound check.

Portfolio members are named ``greedy``, ``greedy-r``, ``greedy-mult``,
``cbf:<tau>``, ``cbf-r:<tau>`` and ``ckbf:<tau>:<b>``. Every member runs on the
same deadline profile and the cheapest valid schedule wins, ties going to the
earlier member.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .cbf import cbf, cbf_r, ckbf
from .deadlines import DeadlineProfile, check_lp_i, check_lp_r
from .greedy import greedy, greedy_multiplicity, greedy_r
from .model import Instance, PreconditionError, Schedule, cost, max_degree
from .oracle import OracleLimitError, opt

MAIN_PORTFOLIO = ("greedy", "cbf:6")
RELEASE_PORTFOLIO = ("greedy-r", "cbf-r:4")


@dataclass(frozen=True)
class MemberResult:
    name: str
    schedule: Schedule
    cost: Fraction
    lam: int | None = None


@dataclass(frozen=True)
class CombinedResult:
    schedule: Schedule
    cost: Fraction
    best: str
    members: tuple[MemberResult, ...]


def parse_member(name: str) -> tuple[str, tuple[int, ...]]:
    head, *args = name.split(":")
    want = {"greedy": 0, "greedy-r": 0, "greedy-mult": 0, "cbf": 1, "cbf-r": 1, "ckbf": 2}
    if head not in want or len(args) != want[head]:
        raise ValueError(f"unknown portfolio member {name!r}")
    try:
        return head, tuple(int(a) for a in args)
    except ValueError as exc:
        raise ValueError(f"non-integer parameter in {name!r}") from exc


def run_member(instance: Instance, profile: DeadlineProfile, name: str) -> MemberResult:
    """Run one allocator without re-checking the profile (the caller did)."""
    head, args = parse_member(name)
    lam = None
    if head == "greedy":
        schedule = greedy(instance, profile, check=False)[0]
    elif head == "greedy-r":
        schedule = greedy_r(instance, profile, check=False)[0]
    elif head == "greedy-mult":
        schedule = greedy_multiplicity(instance, profile, check=False)
    elif head == "cbf":
        res = cbf(instance, profile, args[0], check=False)
        schedule, lam = res.schedule, res.lam
    elif head == "cbf-r":
        res = cbf_r(instance, profile, args[0], check=False)
        schedule, lam = res.schedule, res.lam
    else:
        schedule = ckbf(instance, profile, args[0], args[1], check=False).schedule
    # cost() validates; an invalid member schedule is an internal bug and raises
    return MemberResult(name, schedule, cost(instance, schedule).total, lam)


def combined(instance: Instance, profile: DeadlineProfile, portfolio: Sequence[str] = MAIN_PORTFOLIO,
             jobs: int = 1, check: bool = True) -> CombinedResult:
    """Run every member and keep the cheapest schedule."""
    if not portfolio:
        raise ValueError("empty portfolio")
    for name in portfolio:
        parse_member(name)
    if check:
        ok = (check_lp_r if instance.has_releases else check_lp_i)(instance, profile)[0]
        if not ok:
            raise PreconditionError("deadline profile fails the block LP check")
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            members = tuple(pool.map(lambda n: run_member(instance, profile, n), portfolio))
    else:
        members = tuple(run_member(instance, profile, n) for n in portfolio)
    best = min(range(len(members)), key=lambda i: (members[i].cost, i))
    return CombinedResult(members[best].schedule, members[best].cost, members[best].name, members)


def degree_lower_bound(instance: Instance) -> Fraction:
    """sum_j w_j (r_j + Delta(E_j)): no coflow can finish before that."""
    return sum((c.weight * (c.release + max_degree(c.flows)) for c in instance.coflows), Fraction(0))


def default_tau(instance: Instance) -> int:
    """ceil(sqrt(2 D)) for the smallest coflow degree D."""
    d = min(max_degree(c.flows) for c in instance.coflows)
    return max(2, math.ceil(math.sqrt(2 * d)))


@dataclass(frozen=True)
class AsymptoticReport:
    tau: int
    cost: Fraction
    opt: Fraction | None
    epsilon: Fraction | None      # sum of weights over OPT
    predicted: Fraction | None    # 2 + 4 / tau + epsilon (2 tau + 2)
    deadline_sum: Fraction

    @property
    def ratio(self) -> Fraction | None:
        return None if self.opt is None else self.cost / self.opt

    @property
    def holds(self) -> bool | None:
        return None if self.opt is None else self.ratio <= self.predicted


def asymptotic_check(instance: Instance, profile: DeadlineProfile, tau: int,
                     opt_value: Fraction | None = None, assert_bound: bool = True) -> AsymptoticReport:
    """Run cbf_r and compare cost / OPT against 2 + 4/tau + eps (2 tau + 2).

    ``opt_value`` defaults to the oracle when the instance is small enough;
    otherwise the report carries no OPT and nothing is asserted.
    """
    res = cbf_r(instance, profile, tau)
    if opt_value is None:
        try:
            opt_value = opt(instance)[0].total
        except OracleLimitError:
            opt_value = None
    deadline_sum = profile.weighted_sum(instance)
    if opt_value is None:
        return AsymptoticReport(tau, res.cost, None, None, None, deadline_sum)
    eps = sum(instance.weights, Fraction(0)) / opt_value
    predicted = 2 + Fraction(4, tau) + eps * (2 * tau + 2)
    report = AsymptoticReport(tau, res.cost, opt_value, eps, predicted, deadline_sum)
    if assert_bound and deadline_sum <= 2 * opt_value and not report.holds:
        raise AssertionError(f"cbf_r ratio {report.ratio} exceeds predicted {predicted}")
    return report
