"""Exact coflow scheduling: deadline LPs, greedy and iterated-rounding allocation,
König block scheduling, combination certificates, and a desk-scale oracle."""

from .cbf import (BlockAssignment, BlockStructure, CBFResult, build_blocks, cbf, cbf_r, ckbf,
                  exact_blocks, iterated_round, round_for_release, schedule_blocks)
from .certify import Certificate, builtin, verify_certificate
from .coloring import MatchingDecomposition, decompose
from .combine import asymptotic_check, combined
from .deadlines import (DeadlineProfile, FractionalSchedule, build_lp_d, build_lp_d_intervals,
                        check_lp_i, check_lp_r, completion_curve, expected_deadline_sum,
                        fractional_schedule,
                        generate_deadlines, round_deadlines)
from .greedy import GreedyTrace, greedy, greedy_multiplicity, greedy_r
from .lp import LinearProgram, VertexSolution, feasible, solve
from .model import (Coflow, CostReport, Flow, Instance, Schedule, Verdict, cost, max_degree,
                    validate)
from .oracle import a1_fixture, deadline_feasible_integral, opt

__all__ = [
    "BlockAssignment", "BlockStructure", "CBFResult", "Certificate", "Coflow", "CostReport",
    "DeadlineProfile", "Flow", "FractionalSchedule", "GreedyTrace", "Instance", "LinearProgram",
    "MatchingDecomposition", "Schedule", "Verdict", "VertexSolution", "a1_fixture",
    "asymptotic_check", "build_blocks", "build_lp_d", "build_lp_d_intervals", "builtin", "cbf",
    "cbf_r", "check_lp_i", "check_lp_r", "ckbf", "combined", "completion_curve", "cost",
    "deadline_feasible_integral", "decompose", "exact_blocks", "expected_deadline_sum", "feasible", "fractional_schedule",
    "generate_deadlines", "greedy", "greedy_multiplicity", "greedy_r", "iterated_round",
    "max_degree", "opt", "round_deadlines", "round_for_release", "schedule_blocks", "solve",
    "validate", "verify_certificate",
]
