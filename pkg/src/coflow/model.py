"""Coflow instances, schedules, validation and cost accounting.

Time slots are 1-indexed. A coflow with release ``r`` may only use slots
``r + 1, r + 2, ...``. Schedules are stored as runs: a run repeats the same
matching in ``length`` consecutive slots starting right after ``start``, which
keeps high-multiplicity schedules compact. A plain slot map is the special
case where every run has length one.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

Rational = Fraction

# (coflow index, u, v)
Entry = tuple[int, int, int]


class InstanceError(ValueError):
    """Malformed instance data."""


class ScheduleStructureError(ValueError):
    """A schedule refers to a coflow or flow that does not exist."""


class InvalidScheduleError(ValueError):
    """Raised by :func:`cost` when the schedule does not validate."""

    def __init__(self, verdict: "Verdict") -> None:
        self.verdict = verdict
        super().__init__("invalid schedule: " + "; ".join(str(v) for v in verdict.violations[:5]))


class BoundViolation(AssertionError):
    """An allocator broke one of its guaranteed finishing-time bounds."""


class PreconditionError(ValueError):
    """A deadline profile does not satisfy the LP an allocator relies on."""


def to_rational(value) -> Fraction:
    """Parse ints, Fractions or ``"p/q"`` / decimal strings into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass an int, Fraction or 'p/q' string")
    return Fraction(value)


def format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Flow:
    u: int
    v: int
    multiplicity: int = 1

    def __post_init__(self) -> None:
        if self.multiplicity < 1:
            raise InstanceError(f"flow ({self.u},{self.v}) has multiplicity {self.multiplicity} < 1")


@dataclass(frozen=True)
class Coflow:
    flows: tuple[Flow, ...]
    weight: Fraction = Fraction(1)
    release: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "flows", tuple(self.flows))
        object.__setattr__(self, "weight", to_rational(self.weight))
        if not self.flows:
            raise InstanceError("coflow without flows")
        if self.weight <= 0:
            raise InstanceError(f"coflow weight must be positive, got {self.weight}")
        if self.release < 0:
            raise InstanceError(f"negative release date {self.release}")

    def demand(self) -> Counter:
        """Total multiplicity per vertex pair; duplicate flows are merged."""
        out: Counter = Counter()
        for f in self.flows:
            out[(f.u, f.v)] += f.multiplicity
        return out

    @property
    def copies(self) -> int:
        return sum(f.multiplicity for f in self.flows)


@dataclass(frozen=True)
class Instance:
    left_count: int
    right_count: int
    coflows: tuple[Coflow, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coflows", tuple(self.coflows))
        if self.left_count < 1 or self.right_count < 1:
            raise InstanceError("need at least one vertex on each side")
        if not self.coflows:
            raise InstanceError("instance without coflows")
        for j, c in enumerate(self.coflows):
            for f in c.flows:
                if not (0 <= f.u < self.left_count and 0 <= f.v < self.right_count):
                    raise InstanceError(f"coflow {j}: flow ({f.u},{f.v}) out of vertex range")

    def __len__(self) -> int:
        return len(self.coflows)

    @property
    def weights(self) -> tuple[Fraction, ...]:
        return tuple(c.weight for c in self.coflows)

    @property
    def releases(self) -> tuple[int, ...]:
        return tuple(c.release for c in self.coflows)

    @property
    def total_copies(self) -> int:
        return sum(c.copies for c in self.coflows)

    @property
    def has_releases(self) -> bool:
        return any(c.release for c in self.coflows)

    def all_flows(self) -> Iterator[tuple[int, Flow]]:
        for j, c in enumerate(self.coflows):
            for f in c.flows:
                yield j, f

    def merged(self) -> "Instance":
        """Same instance with duplicate vertex pairs inside a coflow merged."""
        return Instance(self.left_count, self.right_count, tuple(
            Coflow(tuple(Flow(u, v, p) for (u, v), p in c.demand().items()), c.weight, c.release)
            for c in self.coflows))

    def expanded(self) -> "Instance":
        """Same instance with every flow split into unit-multiplicity copies."""
        return Instance(self.left_count, self.right_count, tuple(
            Coflow(tuple(Flow(f.u, f.v) for f in c.flows for _ in range(f.multiplicity)),
                   c.weight, c.release)
            for c in self.coflows))

    def subinstance(self, indices: Iterable[int]) -> "Instance":
        return Instance(self.left_count, self.right_count, tuple(self.coflows[j] for j in indices))


def max_degree(edges: Iterable) -> int:
    """Maximum weighted vertex degree of a multiset of bipartite edges.

    Accepts :class:`Flow` objects or ``(u, v)`` / ``(u, v, mult)`` tuples.
    """
    left: Counter = Counter()
    right: Counter = Counter()
    for e in edges:
        if isinstance(e, Flow):
            u, v, p = e.u, e.v, e.multiplicity
        elif len(e) == 2:
            (u, v), p = e, 1
        else:
            u, v, p = e
        left[u] += p
        right[v] += p
    return max(max(left.values(), default=0), max(right.values(), default=0))


@dataclass(frozen=True)
class Run:
    """The same matching repeated in slots ``start + 1 .. start + length``."""

    start: int
    length: int
    entries: tuple[Entry, ...]

    @property
    def end(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class Schedule:
    runs: tuple[Run, ...] = ()

    @classmethod
    def from_slots(cls, slots: Mapping[int, Iterable[Entry]]) -> "Schedule":
        runs = []
        for t in sorted(slots):
            entries = tuple(tuple(e) for e in slots[t])
            if t < 1:
                raise ScheduleStructureError(f"slot {t} is not a positive integer")
            if entries:
                runs.append(Run(t - 1, 1, entries))
        return cls(tuple(runs))

    def slots(self) -> dict[int, list[Entry]]:
        """Expanded slot map. Only sensible for schedules of modest length."""
        out: dict[int, list[Entry]] = defaultdict(list)
        for r in self.runs:
            for t in range(r.start + 1, r.end + 1):
                out[t].extend(r.entries)
        return dict(sorted(out.items()))

    @property
    def makespan(self) -> int:
        return max((r.end for r in self.runs if r.entries), default=0)

    def shifted(self, offset: int) -> "Schedule":
        return Schedule(tuple(Run(r.start + offset, r.length, r.entries) for r in self.runs))

    def relabeled(self, mapping: Mapping[int, int]) -> "Schedule":
        """Rename coflow indices, e.g. from a sub-instance back to the parent."""
        return Schedule(tuple(
            Run(r.start, r.length, tuple((mapping[j], u, v) for j, u, v in r.entries))
            for r in self.runs))

    def __add__(self, other: "Schedule") -> "Schedule":
        return Schedule(self.runs + other.runs)


@dataclass(frozen=True)
class Violation:
    rule: str
    slot: int | None
    detail: str

    def __str__(self) -> str:
        where = f"slot {self.slot}: " if self.slot is not None else ""
        return f"{self.rule}: {where}{self.detail}"


@dataclass(frozen=True)
class Verdict:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class CostReport:
    completion: tuple[int, ...]
    total: Fraction
    weights: tuple[Fraction, ...] = field(default=(), repr=False)


def _check_structure(instance: Instance, schedule: Schedule) -> None:
    n = len(instance)
    demands = [c.demand() for c in instance.coflows]
    for r in schedule.runs:
        if r.length < 1 or r.start < 0:
            raise ScheduleStructureError(f"run at {r.start} has length {r.length}")
        for j, u, v in r.entries:
            if not 0 <= j < n:
                raise ScheduleStructureError(f"unknown coflow {j}")
            if (u, v) not in demands[j]:
                raise ScheduleStructureError(f"coflow {j} has no flow ({u},{v})")


def validate(instance: Instance, schedule: Schedule) -> Verdict:
    """Check matching, release and completeness rules.

    Raises :class:`ScheduleStructureError` for references to coflows or flows
    that do not exist; those are not validity violations.
    """
    _check_structure(instance, schedule)
    violations: list[Violation] = []

    # matching: sweep over elementary intervals between run boundaries
    cuts = sorted({r.start for r in schedule.runs} | {r.end for r in schedule.runs})
    active = [r for r in schedule.runs if r.entries]
    for a, b in zip(cuts, cuts[1:]):
        covering = [r for r in active if r.start <= a and r.end >= b]
        if not covering:
            continue
        left: dict[int, Entry] = {}
        right: dict[int, Entry] = {}
        for r in covering:
            for e in r.entries:
                _, u, v = e
                if u in left:
                    violations.append(Violation("vertex conflict", a + 1,
                                                f"left vertex {u} used by {left[u]} and {e}"))
                else:
                    left[u] = e
                if v in right:
                    violations.append(Violation("vertex conflict", a + 1,
                                                f"right vertex {v} used by {right[v]} and {e}"))
                else:
                    right[v] = e

    for r in active:
        for j, u, v in r.entries:
            rel = instance.coflows[j].release
            if r.start < rel:
                violations.append(Violation("release date", r.start + 1,
                                            f"coflow {j} flow ({u},{v}) before release {rel}"))

    scheduled: Counter = Counter()
    for r in active:
        for e in r.entries:
            scheduled[e] += r.length
    for j, c in enumerate(instance.coflows):
        for (u, v), p in c.demand().items():
            got = scheduled.get((j, u, v), 0)
            if got != p:
                violations.append(Violation("flow count", None,
                                            f"coflow {j} flow ({u},{v}) scheduled {got} of {p}"))
    return Verdict(tuple(violations))


def completion_times(instance: Instance, schedule: Schedule) -> tuple[int, ...]:
    done = [0] * len(instance)
    for r in schedule.runs:
        for j, _, _ in r.entries:
            done[j] = max(done[j], r.end)
    return tuple(done)


def cost(instance: Instance, schedule: Schedule) -> CostReport:
    """Weighted completion time of a valid schedule, exact."""
    verdict = validate(instance, schedule)
    if not verdict.ok:
        raise InvalidScheduleError(verdict)
    done = completion_times(instance, schedule)
    total = sum((c.weight * t for c, t in zip(instance.coflows, done)), Fraction(0))
    return CostReport(done, total, instance.weights)


# ---------------------------------------------------------------- JSON


def instance_to_dict(instance: Instance) -> dict:
    return {
        "left": instance.left_count,
        "right": instance.right_count,
        "coflows": [
            {
                "weight": int(c.weight) if c.weight.denominator == 1 else format_rational(c.weight),
                "release": c.release,
                "flows": [{"u": f.u, "v": f.v, "mult": f.multiplicity} for f in c.flows],
            }
            for c in instance.coflows
        ],
    }


def instance_from_dict(data: Mapping) -> Instance:
    try:
        coflows = tuple(
            Coflow(
                tuple(Flow(int(f["u"]), int(f["v"]), int(f.get("mult", 1))) for f in c["flows"]),
                to_rational(c.get("weight", 1)),
                int(c.get("release", 0)),
            )
            for c in data["coflows"]
        )
        return Instance(int(data["left"]), int(data["right"]), coflows)
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance document: {exc!r}") from exc


def schedule_to_dict(schedule: Schedule) -> dict:
    return {"slots": {str(t): [{"coflow": j, "u": u, "v": v} for j, u, v in entries]
                      for t, entries in schedule.slots().items()}}


def schedule_from_dict(data: Mapping) -> Schedule:
    try:
        slots = {int(t): [(int(e["coflow"]), int(e["u"]), int(e["v"])) for e in entries]
                 for t, entries in data["slots"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ScheduleStructureError(f"malformed schedule document: {exc!r}") from exc
    return Schedule.from_slots(slots)


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1, sort_keys=True) + "\n"


def loads_instance(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def dumps_schedule(schedule: Schedule) -> str:
    return json.dumps(schedule_to_dict(schedule), sort_keys=True) + "\n"


def loads_schedule(text: str) -> Schedule:
    return schedule_from_dict(json.loads(text))
