import csv
import io
import json
from fractions import Fraction

import pytest

from coflow.cli import CSV_HEADER, main
from coflow.model import dumps_instance, loads_instance
from coflow.oracle import a1_fixture


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def instance_file(tmp_path, capsys):
    path = tmp_path / "inst.json"
    assert run(capsys, "gen", "--seed", "4", "--coflows", "3", "-o", str(path))[0] == 0
    return path


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        run(capsys, "gen", "--seed", "1", "--coflows", "4", "--max-flows", "3", "-o", str(p))
    assert a.read_bytes() == b.read_bytes()
    inst = loads_instance(a.read_text())
    assert inst.releases == (0, 0, 0, 0)
    assert sum(len(c.demand()) for c in inst.coflows) <= 12


def test_gen_rejects_bad_sizes(capsys):
    code, _, err = run(capsys, "gen", "--coflows", "0")
    assert code == 2 and "error" in err


@pytest.mark.parametrize("algo", ["combined", "greedy", "greedy-mult", "cbf", "ckbf"])
def test_solve_then_verify(instance_file, tmp_path, capsys, algo):
    sched = tmp_path / f"{algo}.json"
    code, out, _ = run(capsys, "solve", str(instance_file), "--algo", algo, "--tau", "6",
                       "--deadline-mode", "candidates:16", "-o", str(sched))
    assert code == 0
    total = out.splitlines()[0].split()[1]
    assert Fraction(total) > 0
    assert "EXCEEDED" not in out
    code, out, _ = run(capsys, "verify", str(instance_file), str(sched))
    assert code == 0 and out.strip() == f"valid; cost {total}"


def test_solve_release_instance(tmp_path, capsys):
    path = tmp_path / "rel.json"
    run(capsys, "gen", "--seed", "2", "--release-max", "3", "-o", str(path))
    for algo in ("combined-r", "cbf-r", "greedy"):
        assert run(capsys, "solve", str(path), "--algo", algo, "--deadline-mode", "seed:3")[0] == 0
    code, _, err = run(capsys, "solve", str(path), "--algo", "cbf")
    assert code == 2 and "release" in err


def test_solve_greedy_on_a1(tmp_path, capsys):
    path = tmp_path / "a1.json"
    path.write_text(dumps_instance(a1_fixture()[0]))
    code, out, _ = run(capsys, "solve", str(path), "--algo", "greedy", "--deadline-mode", "candidates:8")
    assert code == 0
    assert all(line.endswith(" ok") for line in out.splitlines() if line.startswith("coflow"))


def test_solve_epsilon_and_lp_dump(instance_file, tmp_path, capsys):
    dump = tmp_path / "lp.txt"
    code, _, _ = run(capsys, "solve", str(instance_file), "--epsilon", "1/4", "--dump-lp", str(dump))
    assert code == 0 and dump.read_text().startswith("min ")


def test_unreadable_instance(capsys):
    code, _, err = run(capsys, "solve", "/nonexistent/inst.json")
    assert code == 2 and "cannot read" in err


def test_verify_detects_conflict(instance_file, tmp_path, capsys):
    sched = tmp_path / "s.json"
    run(capsys, "solve", str(instance_file), "--algo", "greedy", "-o", str(sched))
    data = json.loads(sched.read_text())
    first = min(data["slots"], key=int)
    # a second copy of an entry in its own slot clashes with itself
    data["slots"][first].append(dict(data["slots"][first][0]))
    sched.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", str(instance_file), str(sched))
    assert code == 1 and "violation" in out


def test_verify_vertex_conflict_names_slot(tmp_path, capsys):
    inst = tmp_path / "i.json"
    inst.write_text(json.dumps({"left": 1, "right": 2, "coflows": [
        {"weight": 1, "flows": [{"u": 0, "v": 0}, {"u": 0, "v": 1}]}]}))
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"slots": {"3": [{"coflow": 0, "u": 0, "v": 0},
                                                 {"coflow": 0, "u": 0, "v": 1}]}}))
    code, out, _ = run(capsys, "verify", str(inst), str(sched))
    assert code == 1 and "vertex conflict: slot 3" in out


def test_verify_unknown_coflow(instance_file, tmp_path, capsys):
    sched = tmp_path / "s.json"
    sched.write_text(json.dumps({"slots": {"1": [{"coflow": 99, "u": 0, "v": 0}]}}))
    code, _, err = run(capsys, "verify", str(instance_file), str(sched))
    assert code == 2 and "structural" in err


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_bench_generated_with_opt(capsys, monkeypatch):
    monkeypatch.delenv("COFLOW_JOBS", raising=False)
    code, out, _ = run(capsys, "bench", "--count", "4", "--max-copies", "7", "--with-opt",
                       "--deadline-mode", "candidates:16")
    rows = _rows(out)
    assert code == 0 and rows[0] == CSV_HEADER
    assert len(rows) == 1 + 4 * 3
    assert rows[1:] == sorted(rows[1:], key=lambda r: (r[0], r[2]))
    for r in rows[1:]:
        assert Fraction(r[8]) >= 1
        if r[2] == "combined":
            assert Fraction(r[8]) <= Fraction(140, 41)


def test_bench_release_parallel(capsys, monkeypatch):
    monkeypatch.setenv("COFLOW_JOBS", "2")
    code, out, _ = run(capsys, "bench", "--count", "3", "--release-max", "3", "--max-copies", "7",
                       "--portfolio", "greedy-r,cbf-r:4,combined-r", "--with-opt",
                       "--deadline-mode", "candidates:16")
    rows = _rows(out)
    assert code == 0 and len(rows) == 1 + 3 * 3
    assert all(Fraction(r[8]) <= Fraction(109, 25) for r in rows[1:] if r[2] == "combined-r")


def test_bench_empty_glob(tmp_path, capsys):
    code, out, _ = run(capsys, "bench", "--glob", str(tmp_path / "*.json"))
    assert code == 0 and out == ",".join(CSV_HEADER) + "\n"


def test_bench_bad_portfolio(capsys):
    assert run(capsys, "bench", "--portfolio", "fifo")[0] == 2


@pytest.mark.parametrize("name,first", [
    ("main", "alpha = 70/41, ratio = 140/41, tight for all x"),
    ("release", "a = 46/25, b = 17/25, ratio = 109/25"),
    ("intgap", "alpha = 109/56, ratio = 109/28"),
    ("improved", "alpha = 2485/1460, ratio = 497/146"),
])
def test_certify_builtins(capsys, name, first):
    code, out, _ = run(capsys, "certify", "--builtin", name)
    assert code == 0 and out.startswith(first)


def test_certify_improved_bound_line(capsys):
    _, out, _ = run(capsys, "certify", "--builtin", "improved")
    assert "bound = 2485/1460 (x+1), ratio = 497/146" in out


def test_certify_rejects_bad_sum(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps([
        {"form": "linear", "coefficients": {"a": 2, "c": -1}, "weight": "0.5"},
        {"form": "linear", "coefficients": {"a": "4/3", "c": "31/6"}, "weight": "0.49"}]))
    code, out, _ = run(capsys, "certify", str(path))
    assert code == 1 and out.startswith("rejected")


def test_certify_needs_exactly_one_source(capsys):
    assert run(capsys, "certify")[0] == 2


def test_opt_and_fixture(instance_file, tmp_path, capsys):
    code, out, _ = run(capsys, "opt", str(instance_file))
    assert code == 0 and out.startswith("opt ")
    code, out, _ = run(capsys, "fixture-a1", "-o", str(tmp_path / "a1.json"))
    assert code == 0
    assert "block LP feasible: True" in out
    assert "integral schedule meeting deadlines: False" in out
    assert run(capsys, "opt", str(tmp_path / "a1.json"))[0] == 2


def test_argparse_usage_exit():
    with pytest.raises(SystemExit) as exc:
        main(["solve"])
    assert exc.value.code == 2
