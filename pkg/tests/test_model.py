import json
from fractions import Fraction

import pytest
from hypothesis import given

from coflow.model import (Coflow, Flow, Instance, InstanceError, InvalidScheduleError, Run,
                          Schedule, ScheduleStructureError, completion_times, cost,
                          dumps_instance, dumps_schedule, loads_instance, loads_schedule,
                          max_degree, validate)
from coflow.oracle import opt
from strategies import instances


def single(u=0, v=0, p=1, weight=1, release=0):
    return Coflow((Flow(u, v, p),), weight, release)


def test_single_edge_is_valid():
    inst = Instance(1, 1, (single(),))
    assert validate(inst, Schedule.from_slots({1: [(0, 0, 0)]})).ok


def test_shared_left_vertex_conflicts():
    inst = Instance(1, 2, (Coflow((Flow(0, 0), Flow(0, 1))),))
    verdict = validate(inst, Schedule.from_slots({1: [(0, 0, 0), (0, 0, 1)]}))
    assert [v.rule for v in verdict.violations] == ["vertex conflict"]
    assert verdict.violations[0].slot == 1


def test_release_date_respected():
    inst = Instance(1, 1, (single(release=2),))
    bad = validate(inst, Schedule.from_slots({2: [(0, 0, 0)]}))
    assert [v.rule for v in bad.violations] == ["release date"]
    assert validate(inst, Schedule.from_slots({3: [(0, 0, 0)]})).ok


def test_missing_and_extra_copies():
    inst = Instance(1, 1, (single(p=2),))
    short = validate(inst, Schedule.from_slots({1: [(0, 0, 0)]}))
    extra = validate(inst, Schedule((Run(0, 3, ((0, 0, 0),)),)))
    assert [v.rule for v in short.violations] == ["flow count"]
    assert [v.rule for v in extra.violations] == ["flow count"]


def test_structural_errors_are_not_violations():
    inst = Instance(1, 1, (single(),))
    with pytest.raises(ScheduleStructureError):
        validate(inst, Schedule.from_slots({1: [(3, 0, 0)]}))
    with pytest.raises(ScheduleStructureError):
        validate(inst, Schedule.from_slots({1: [(0, 0, 0)], 2: [(0, 1, 1)]}))
    with pytest.raises(ScheduleStructureError):
        Schedule.from_slots({0: [(0, 0, 0)]})


def test_cost_examples():
    one = Instance(1, 1, (single(),))
    assert cost(one, Schedule.from_slots({1: [(0, 0, 0)]})).total == 1
    two = Instance(1, 1, (single(weight=1), single(weight=2)))
    report = cost(two, Schedule.from_slots({1: [(0, 0, 0)], 2: [(1, 0, 0)]}))
    assert report.completion == (1, 2) and report.total == 5


def test_cost_rejects_invalid():
    inst = Instance(1, 1, (single(), single()))
    with pytest.raises(InvalidScheduleError):
        cost(inst, Schedule.from_slots({1: [(0, 0, 0), (1, 0, 0)]}))


def test_max_degree_examples():
    assert max_degree([Flow(0, 0, 3)]) == 3
    assert max_degree([Flow(u, v) for u in range(2) for v in range(2)]) == 2
    assert max_degree([]) == 0


def test_instance_validation():
    with pytest.raises(InstanceError):
        Flow(0, 0, 0)
    with pytest.raises(InstanceError):
        Coflow(())
    with pytest.raises(InstanceError):
        Coflow((Flow(0, 0),), weight=0)
    with pytest.raises(InstanceError):
        Instance(1, 1, (Coflow((Flow(0, 2),)),))


def test_runs_match_expanded_slots():
    sched = Schedule((Run(2, 3, ((0, 0, 0),)),))
    assert sorted(sched.slots()) == [3, 4, 5]
    assert sched.makespan == 5
    assert sched.shifted(1).makespan == 6


def test_json_round_trip():
    inst = Instance(2, 2, (Coflow((Flow(0, 1, 3),), Fraction(3, 2), 1), single(1, 0)))
    again = loads_instance(dumps_instance(inst))
    assert again == inst
    sched = Schedule.from_slots({2: [(0, 0, 1)], 3: [(0, 0, 1), (1, 1, 0)], 4: [(0, 0, 1)]})
    assert loads_schedule(dumps_schedule(sched)).slots() == sched.slots()
    assert json.loads(dumps_instance(inst))["coflows"][0]["weight"] == "3/2"


@given(instances(max_release=2))
def test_optimal_schedule_respects_lower_bounds(inst):
    report, sched = opt(inst)
    assert validate(inst, sched).ok
    for j, c in enumerate(inst.coflows):
        assert report.completion[j] >= c.release + 1
        if not inst.has_releases:
            assert report.completion[j] >= max_degree(c.flows)
    assert completion_times(inst, sched) == report.completion


@given(instances())
def test_merged_and_expanded_keep_demand(inst):
    for other in (inst.merged(), inst.expanded()):
        assert [c.demand() for c in other.coflows] == [c.demand() for c in inst.coflows]
    assert all(f.multiplicity == 1 for _, f in inst.expanded().all_flows())
