"""Command-line front end: ``coflow {gen,solve,verify,bench,certify,opt,fixture-a1}``.

Exit codes: 0 success, 1 verification or certificate failure, 2 usage or
structural error. Machine output prints rationals as ``p/q``.
"""

from __future__ import annotations

import argparse
import csv
import glob
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import lp as lpmod
from .cbf import cbf, cbf_r, ckbf
from .certify import BUILTINS, CertificateError, builtin, certificate_from_json, describe, verify_certificate
from .combine import MAIN_PORTFOLIO, RELEASE_PORTFOLIO, combined, parse_member, run_member
from .deadlines import build_lp_d, build_lp_d_intervals, check_lp_i, generate_deadlines
from .generate import random_instance
from .greedy import greedy, greedy_multiplicity, greedy_r
from .model import (InstanceError, PreconditionError, ScheduleStructureError, cost,
                    dumps_instance, dumps_schedule, format_rational, loads_instance,
                    loads_schedule, validate)
from .oracle import OracleLimitError, a1_fixture, deadline_feasible_integral, opt

CSV_HEADER = ["instance", "seed", "algo", "tau", "lambda", "b", "cost", "opt", "ratio", "ms"]


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_instance(path: str):
    try:
        return loads_instance(_read(path))
    except (InstanceError, json.JSONDecodeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _jobs(args) -> int:
    env = os.environ.get("COFLOW_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"COFLOW_JOBS must be an integer, got {env!r}") from exc
    return max(1, args.jobs)


def _epsilon(args):
    return None if args.epsilon is None else Fraction(args.epsilon)


# ---------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    try:
        inst = random_instance(args.seed, args.left, args.right, args.coflows, args.max_mult,
                               args.max_flows, args.release_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _write(args.output, dumps_instance(inst))
    return 0


# ---------------------------------------------------------------- solve


def _solve(inst, profile, algo: str, tau: int | None, b: int):
    """Returns (schedule, per-coflow bounds or None, chosen offset or None)."""
    rel = inst.has_releases
    c = profile.deadlines
    if algo == "greedy":
        sched = (greedy_r if rel else greedy)(inst, profile)[0]
        return sched, [r + 2 * cj - 1 for r, cj in zip(inst.releases, c)], None
    if algo == "greedy-mult":
        sched = greedy_multiplicity(inst, profile)
        return sched, [2 * cj - 1 for cj in c], None
    if algo == "cbf":
        t = tau or 6
        res = cbf(inst, profile, t)
        return res.schedule, None, res.lam
    if algo == "cbf-r":
        t = tau or 4
        res = cbf_r(inst, profile, t)
        return res.schedule, None, res.lam
    if algo == "ckbf":
        res = ckbf(inst, profile, tau or 6, b)
        return res.schedule, None, None
    if algo == "combined":
        port = ("greedy", f"cbf:{tau or 6}")
    else:
        port = ("greedy-r", f"cbf-r:{tau or 4}")
    res = combined(inst, profile, port)
    return res.schedule, None, next((m.lam for m in res.members if m.name == res.best), None)


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    if args.dump_lp:
        dlp = build_lp_d(inst) if args.epsilon is None else build_lp_d_intervals(inst, _epsilon(args))
        Path(args.dump_lp).write_text(dlp.lp.dump())
    profile = generate_deadlines(inst, args.deadline_mode, _epsilon(args))
    if args.algo in ("combined", "cbf", "ckbf", "greedy-mult") and inst.has_releases:
        raise UsageError(f"--algo {args.algo} needs an instance without release dates")
    schedule, bounds, lam = _solve(inst, profile, args.algo, args.tau, args.b)
    verdict = validate(inst, schedule)
    if not verdict.ok:
        for v in verdict.violations:
            print(f"violation: {v}", file=sys.stderr)
        return 1
    report = cost(inst, schedule)
    if args.output:
        Path(args.output).write_text(dumps_schedule(schedule))
    print(f"cost {format_rational(report.total)}")
    print(f"deadlines {json.dumps(profile.to_dict())}")
    if lam is not None:
        print(f"lambda {lam}")
    for j, f in enumerate(report.completion):
        line = f"coflow {j}: finish {f} deadline {format_rational(profile.deadlines[j])}"
        if bounds is not None:
            ok = f <= bounds[j]
            line += f" bound {format_rational(bounds[j])} {'ok' if ok else 'EXCEEDED'}"
        print(line)
    return 0


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance)
    try:
        schedule = loads_schedule(_read(args.schedule))
        verdict = validate(inst, schedule)
    except (ScheduleStructureError, json.JSONDecodeError) as exc:
        print(f"structural error: {exc}", file=sys.stderr)
        return 2
    if not verdict.ok:
        for v in verdict.violations:
            print(f"violation: {v}")
        return 1
    report = cost(inst, schedule)
    print(f"valid; cost {format_rational(report.total)}")
    return 0


# ---------------------------------------------------------------- bench


def _bench_members(portfolio: list[str], release: bool) -> list[str]:
    out = []
    for name in portfolio:
        if name == "combined":
            out.append("combined")
        elif name == "combined-r":
            out.append("combined-r")
        else:
            head, _ = parse_member(name)
            if release and head in ("greedy", "cbf", "ckbf", "greedy-mult"):
                continue
            out.append(name)
    return out


def _bench_one(task) -> list[list[str]]:
    label, seed, text, portfolio, with_opt, mode, limit = task
    inst = loads_instance(text)
    profile = generate_deadlines(inst, mode)
    opt_value = None
    if with_opt:
        try:
            opt_value = opt(inst, limit=limit)[0].total
        except OracleLimitError:
            opt_value = None
    rows = []
    for name in _bench_members(portfolio, inst.has_releases):
        start = time.perf_counter()
        tau = lam = b = ""
        if name in ("combined", "combined-r"):
            port = MAIN_PORTFOLIO if name == "combined" else RELEASE_PORTFOLIO
            if name == "combined" and inst.has_releases:
                continue
            res = combined(inst, profile, port, check=False)
            value = res.cost
            tau = parse_member(port[1])[1][0]
            best = next(m for m in res.members if m.name == res.best)
            lam = "" if best.lam is None else best.lam
        else:
            head, params = parse_member(name)
            member = run_member(inst, profile, name)
            value = member.cost
            if params:
                tau = params[0]
            if head == "ckbf":
                b = params[1]
            lam = "" if member.lam is None else member.lam
        ms = (time.perf_counter() - start) * 1000
        rows.append([label, "" if seed is None else str(seed), name, str(tau), str(lam), str(b),
                     format_rational(value),
                     "" if opt_value is None else format_rational(opt_value),
                     "" if opt_value is None else format_rational(value / opt_value),
                     f"{ms:.1f}"])
    return rows


def cmd_bench(args) -> int:
    portfolio = [p for p in args.portfolio.split(",") if p]
    for name in portfolio:
        if name not in ("combined", "combined-r"):
            try:
                parse_member(name)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
    tasks = []
    if args.glob is not None:
        for path in sorted(glob.glob(args.glob)):
            tasks.append((path, None, _read(path)))
    else:
        for k in range(args.count):
            seed = args.seed + k
            inst = random_instance(seed, args.left, args.right, args.coflows, args.max_mult,
                                   args.max_flows, args.release_max, args.max_copies)
            tasks.append((f"gen-{seed}", seed, dumps_instance(inst)))
    work = [(label, seed, text, portfolio, args.with_opt, args.deadline_mode, args.opt_limit)
            for label, seed, text in tasks]
    jobs = _jobs(args)
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_bench_one, work))
    else:
        results = [_bench_one(w) for w in work]
    rows = sorted((r for rs in results for r in rs), key=lambda r: (r[0], r[2]))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(rows)
    _write(args.output, buf.getvalue())
    return 0


# ---------------------------------------------------------------- certify / opt / fixture


def cmd_certify(args) -> int:
    if (args.builtin is None) == (args.file is None):
        raise UsageError("give either a certificate file or --builtin")
    try:
        cert = builtin(args.builtin) if args.builtin else certificate_from_json(_read(args.file))
    except CertificateError as exc:
        print(f"rejected: {exc}")
        return 1
    verdict = verify_certificate(cert)
    for line in describe(cert, verdict):
        print(line)
    return 0 if verdict.ok else 1


def cmd_opt(args) -> int:
    inst = _load_instance(args.instance)
    try:
        report, schedule = opt(inst, limit=args.limit)
    except OracleLimitError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    if args.output:
        Path(args.output).write_text(dumps_schedule(schedule))
    print(f"opt {format_rational(report.total)}")
    print("completion " + " ".join(str(c) for c in report.completion))
    return 0


def cmd_fixture_a1(args) -> int:
    inst, profile = a1_fixture()
    if args.output:
        Path(args.output).write_text(dumps_instance(inst))
    ok, point = check_lp_i(inst, profile)
    integral = deadline_feasible_integral(inst, profile)
    print(f"deadlines {json.dumps(profile.to_dict())}")
    print(f"block LP feasible: {ok}")
    if point is not None:
        values = sorted({format_rational(x) for x in point.assignment.values()})
        print(f"vertex point values: {' '.join(values)}")
    print(f"integral schedule meeting deadlines: {integral}")
    return 0 if ok and not integral else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def gen_args(q):
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--left", type=int, default=3)
        q.add_argument("--right", type=int, default=3)
        q.add_argument("--coflows", type=int, default=3)
        q.add_argument("--max-mult", type=int, default=1)
        q.add_argument("--max-flows", type=int, default=3)
        q.add_argument("--release-max", type=int, default=0)

    q = sub.add_parser("gen", help="write a random instance")
    gen_args(q)
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_gen)

    q = sub.add_parser("solve", help="deadlines, allocation, validation")
    q.add_argument("instance")
    q.add_argument("--algo", default="combined",
                   choices=["greedy", "greedy-mult", "cbf", "cbf-r", "ckbf", "combined", "combined-r"])
    q.add_argument("--tau", type=int)
    q.add_argument("--b", type=int, default=1)
    q.add_argument("--deadline-mode", default="candidates:64")
    q.add_argument("--epsilon", help="use geometric intervals with this epsilon (e.g. 1/4)")
    q.add_argument("--dump-lp", help="write the deadline LP as plain-text equations")
    q.add_argument("-o", "--output", help="schedule JSON path")
    q.set_defaults(func=cmd_solve)

    q = sub.add_parser("verify", help="validate a schedule against an instance")
    q.add_argument("instance")
    q.add_argument("schedule")
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("bench", help="CSV benchmark over instances")
    q.add_argument("--glob", help="instance files; otherwise instances are generated")
    q.add_argument("--count", type=int, default=10)
    gen_args(q)
    q.add_argument("--max-copies", type=int)
    q.add_argument("--portfolio", default="greedy,cbf:6,combined")
    q.add_argument("--with-opt", action="store_true")
    q.add_argument("--opt-limit", type=int, default=10)
    q.add_argument("--deadline-mode", default="candidates:64")
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_bench)

    q = sub.add_parser("certify", help="verify a combination certificate")
    q.add_argument("file", nargs="?")
    q.add_argument("--builtin", choices=list(BUILTINS))
    q.set_defaults(func=cmd_certify)

    q = sub.add_parser("opt", help="exact optimum of a small instance")
    q.add_argument("instance")
    q.add_argument("--limit", type=int, default=10)
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_opt)

    q = sub.add_parser("fixture-a1", help="the non-integral block LP fixture")
    q.add_argument("-o", "--output")
    q.set_defaults(func=cmd_fixture_a1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PreconditionError, lpmod.LPError, ScheduleStructureError, InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
