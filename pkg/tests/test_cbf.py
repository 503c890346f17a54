from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coflow.cbf import (BlockStructure, build_blocks, cbf, cbf_r, ckbf, exact_blocks,
                        iterated_round, offsets, round_for_release, schedule_blocks)
from coflow.deadlines import DeadlineProfile, generate_deadlines
from coflow.model import (Coflow, Flow, Instance, PreconditionError, completion_times, cost,
                          validate)
from coflow.oracle import a1_fixture
from strategies import instances


def profile(inst, *deadlines):
    return DeadlineProfile.for_instance(inst, deadlines)


def blank(n):
    return Instance(1, 1, tuple(Coflow((Flow(0, 0),)) for _ in range(n)))


def assert_rounding_invariants(inst, assignment):
    sizes = assignment.blocks.sizes
    load = {}
    for (k, b), n in assignment.counts.items():
        _, u, v, _ = assignment.flows[k]
        load[(b, "L", u)] = load.get((b, "L", u), 0) + n
        load[(b, "R", v)] = load.get((b, "R", v), 0) + n
    assert all(n <= sizes[key[0]] + 2 for key, n in load.items())
    for record in assignment.audit.records:
        if "iteration" in record:
            assert record["fixed"] >= 1
            assert all(d[3] <= 3 for d in record["dropped"])
    for k, (j, _, _, p) in enumerate(assignment.flows):
        assert sum(assignment.counts.get((k, b), 0) for b in assignment.blocks.allowed(j)) == p
        assert all(b in assignment.blocks.allowed(j) for kk, b in assignment.counts if kk == k)


def test_offsets():
    assert offsets(2) == (0, 3)
    assert offsets(6) == (0, 2, 3, 4, 5, 7)
    with pytest.raises(ValueError):
        build_blocks(profile(blank(1), 1), 6, 1)
    with pytest.raises(ValueError):
        build_blocks(profile(blank(1), 1), 1)


def test_block_rounding_examples():
    b = build_blocks(profile(blank(2), 1, 7), 6)
    assert [b.rounded_deadline(j) for j in range(2)] == [6, 12]
    assert b.sizes[1:] == (6, 6)
    merged = build_blocks(profile(blank(2), Fraction(11, 2), 6), 6)
    assert merged.count == 1 and merged.deadline_block == (1, 1)
    shifted = build_blocks(profile(blank(1), 7), 6, 2)
    assert shifted.rounded_deadline(0) == 8
    assert shifted.boundaries == (0, 2, 8)


def test_release_rounding_example():
    inst = Instance(1, 1, (Coflow((Flow(0, 0),), 1, 1),))
    blocks = round_for_release(profile(inst, 2), 2)
    assert blocks.boundaries == (0, 2, 6)
    assert blocks.first_block == (2,)
    result = cbf_r(inst, profile(inst, 2), 2)
    assert completion_times(inst, result.schedule)[0] <= 8
    assert validate(inst, result.schedule).ok


def test_block_structure_rejects_bad_boundaries():
    with pytest.raises(ValueError):
        BlockStructure(2, 0, (0, 2, 2), (1,), (1,))
    with pytest.raises(ValueError):
        BlockStructure(2, 0, (0, 2), (1,), (2,))


def test_integral_first_vertex():
    inst = Instance(2, 2, (Coflow((Flow(0, 0), Flow(1, 1))),))
    a = iterated_round(inst, build_blocks(profile(inst, 1), 2))
    assert a.audit.max_violation == 0
    assert not [r for r in a.audit.records if "iteration" in r]


def test_a1_rounding_runs_the_loop():
    inst, prof = a1_fixture()
    a = iterated_round(inst, exact_blocks(prof))
    iterations = [r for r in a.audit.records if "iteration" in r]
    assert iterations and iterations[0]["moved"] is not None
    assert 1 <= a.audit.max_violation <= 2
    assert_rounding_invariants(inst, a)
    for lam in offsets(2):
        assert_rounding_invariants(inst, iterated_round(inst, build_blocks(prof, 2, lam)))


def test_audit_is_jsonl():
    inst, prof = a1_fixture()
    lines = iterated_round(inst, exact_blocks(prof)).audit.to_jsonl().splitlines()
    assert lines[0].startswith("{") and '"final": true' in lines[-1]


def test_schedule_blocks_examples():
    path = Instance(2, 2, (Coflow((Flow(0, 0), Flow(1, 0), Flow(1, 1))),))
    a = iterated_round(path, build_blocks(profile(path, 2), 2))
    sched = schedule_blocks(path, a)
    assert completion_times(path, sched) == (2,)
    # the release pushes everything past block 1, which stays empty and takes no slots
    late = Instance(2, 2, (Coflow((Flow(0, 0), Flow(0, 1)), 1, 2),))
    a = iterated_round(late, round_for_release(profile(late, 4), 2))
    assert not a.block_edges(1)
    sched = schedule_blocks(late, a)
    assert validate(late, sched).ok
    assert sorted(sched.slots()) == [3, 4]
    assert schedule_blocks(late, a, 5).makespan == sched.makespan + 5


def test_cbf_single_edge():
    inst = blank(1)
    result = cbf(inst, profile(inst, 1), 2)
    assert result.cost == 1
    assert [t.lam for t in result.trials] == [0, 3]


@pytest.mark.parametrize("tau", [2, 3, 6])
def test_lattice_deadlines_tight_bound(tau):
    inst = Instance(3, 3, (Coflow((Flow(0, 0, tau), Flow(1, 1))), Coflow((Flow(0, 1, tau),)),
                           Coflow((Flow(2, 2, 2 * tau), Flow(0, 2)))))
    prof = profile(inst, tau, 2 * tau, 3 * tau)
    zero = cbf(inst, prof, tau).trials[0]
    for j, f in enumerate(completion_times(inst, zero.schedule)):
        assert f <= Fraction(tau + 2, tau) * prof.deadlines[j]


def test_cbf_preconditions():
    late = Instance(1, 1, (Coflow((Flow(0, 0),), 1, 1),))
    with pytest.raises(PreconditionError):
        cbf(late, profile(late, 2), 2)
    with pytest.raises(PreconditionError):
        ckbf(late, profile(late, 2), 2, 1)
    double = Instance(1, 1, (Coflow((Flow(0, 0, 2),)),))
    with pytest.raises(PreconditionError):
        cbf(double, profile(double, 1), 2)
    with pytest.raises(ValueError):
        ckbf(blank(1), profile(blank(1), 1), 2, 0)


def test_ckbf_prefix_is_one_matching():
    inst = Instance(2, 2, (Coflow((Flow(0, 0),)), Coflow((Flow(1, 1),)), Coflow((Flow(0, 1, 3),))))
    result = ckbf(inst, profile(inst, 1, 1, 4), 6, 1)
    assert result.prefix == (0, 1)
    done = completion_times(inst, result.schedule)
    assert done[:2] == (1, 1) and done[2] >= 2


def test_ckbf_without_prefix_is_shifted_cbf():
    inst = Instance(2, 2, (Coflow((Flow(0, 0, 2),)), Coflow((Flow(0, 1),))))
    prof = profile(inst, 3, 4)
    shifted = ckbf(inst, prof, 6, 2)
    plain = cbf(inst, prof, 6)
    assert shifted.prefix == ()
    assert completion_times(inst, shifted.schedule) == tuple(
        f + 2 for f in completion_times(inst, plain.schedule))


def _weighted(inst, finish, bound):
    return sum(w * f for w, f in zip(inst.weights, finish)) <= sum(
        w * bound(j) for j, w in enumerate(inst.weights))


@given(instances(max_copies=8), st.integers(2, 8))
def test_cbf_weighted_bound(inst, tau):
    prof = generate_deadlines(inst, "candidates:8")
    result = cbf(inst, prof, tau)
    c = prof.deadlines
    slope = Fraction(tau + 2, tau)
    finish = cost(inst, result.schedule).completion
    assert _weighted(inst, finish, lambda j: slope * c[j] + Fraction(tau, 2) + Fraction(5, 2)
                     - Fraction(2, tau))
    for trial in result.trials:
        assert_rounding_invariants(inst, trial.assignment)
    assert result.cost == min(t.cost for t in result.trials)


@given(instances(max_copies=8, max_release=3), st.integers(2, 6))
def test_cbf_r_weighted_bound(inst, tau):
    prof = generate_deadlines(inst, "candidates:8")
    result = cbf_r(inst, prof, tau)
    c = prof.deadlines
    slope = Fraction(tau + 2, tau)
    finish = cost(inst, result.schedule).completion
    assert _weighted(inst, finish, lambda j: slope * c[j] + Fraction(3 * tau, 2) + Fraction(9, 2)
                     - Fraction(2, tau))
    zero = completion_times(inst, result.trials[0].schedule)
    assert all(f <= slope * c[j] + 2 * tau + 4 for j, f in enumerate(zero))


@given(instances(max_copies=8), st.integers(1, 3))
def test_ckbf_weighted_bound(inst, b):
    prof = generate_deadlines(inst, "candidates:8")
    try:
        result = ckbf(inst, prof, 6, b)
    except PreconditionError:
        return
    c = prof.deadlines
    finish = cost(inst, result.schedule).completion
    assert _weighted(inst, finish, lambda j: Fraction(b) if c[j] < b + 1 else
                     Fraction(4, 3) * c[j] + Fraction(31, 6) + b)
