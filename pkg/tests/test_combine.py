from fractions import Fraction

import pytest
from hypothesis import given

from coflow.combine import (MAIN_PORTFOLIO, RELEASE_PORTFOLIO, asymptotic_check, combined,
                            default_tau, degree_lower_bound, parse_member)
from coflow.deadlines import DeadlineProfile, generate_deadlines
from coflow.generate import degree_family
from coflow.model import Coflow, Flow, Instance, PreconditionError, validate
from strategies import instances


def test_parse_member():
    assert parse_member("greedy") == ("greedy", ())
    assert parse_member("cbf:6") == ("cbf", (6,))
    assert parse_member("ckbf:6:1") == ("ckbf", (6, 1))
    for bad in ("cbf", "ckbf:6", "greedy:1", "fifo", "cbf:x"):
        with pytest.raises(ValueError):
            parse_member(bad)


def test_empty_portfolio_and_precondition():
    inst = Instance(1, 1, (Coflow((Flow(0, 0, 2),)),))
    with pytest.raises(ValueError):
        combined(inst, DeadlineProfile.for_instance(inst, [2]), ())
    with pytest.raises(PreconditionError):
        combined(inst, DeadlineProfile.for_instance(inst, [1]))


@given(instances(max_copies=8))
def test_combined_is_cheapest_member(inst):
    prof = generate_deadlines(inst, "candidates:8")
    portfolio = MAIN_PORTFOLIO + ("greedy-mult", "ckbf:6:1")
    try:
        res = combined(inst, prof, portfolio)
    except PreconditionError:
        # the ckbf prefix can exceed degree b on some profiles
        res = combined(inst, prof, MAIN_PORTFOLIO)
    assert validate(inst, res.schedule).ok
    assert res.cost == min(m.cost for m in res.members)
    assert res.cost == next(m.cost for m in res.members if m.name == res.best)


@given(instances(max_copies=8, max_release=2))
def test_release_portfolio_and_threads(inst):
    prof = generate_deadlines(inst, "candidates:8")
    one = combined(inst, prof, RELEASE_PORTFOLIO)
    two = combined(inst, prof, RELEASE_PORTFOLIO, jobs=2)
    assert one.cost == two.cost and one.best == two.best


def test_lower_bound_and_tau():
    inst = Instance(2, 2, (Coflow((Flow(0, 0, 3), Flow(0, 1)), 2, 1), Coflow((Flow(1, 1, 5),))))
    assert degree_lower_bound(inst) == 2 * (1 + 4) + 5
    assert default_tau(inst) == 3
    assert default_tau(Instance(1, 1, (Coflow((Flow(0, 0),)),))) == 2


def test_heavy_coflow_report():
    inst = Instance(2, 2, (Coflow((Flow(0, 0, 12), Flow(0, 1, 8), Flow(1, 1, 20))),))
    prof = generate_deadlines(inst, "candidates:16", epsilon=Fraction(1, 4))
    report = asymptotic_check(inst, prof, 10, opt_value=Fraction(20))
    assert report.predicted == Fraction(12, 5) + Fraction(22, 20)
    assert report.holds
    assert report.ratio <= report.predicted


def test_report_without_oracle():
    inst = degree_family(6, 0)
    prof = generate_deadlines(inst, "candidates:8", epsilon=Fraction(1, 4))
    report = asymptotic_check(inst, prof, default_tau(inst))
    assert report.opt is None and report.holds is None


@pytest.mark.parametrize("degree", [5, 10, 20])
def test_degree_family_epsilon(degree):
    inst = degree_family(degree, degree)
    opt_value = degree_lower_bound(inst)
    eps = sum(inst.weights) / opt_value
    assert eps <= Fraction(1, degree)
    prof = generate_deadlines(inst, "candidates:16", epsilon=Fraction(1, 4))
    report = asymptotic_check(inst, prof, default_tau(inst), opt_value=opt_value)
    assert report.epsilon == eps and report.holds
