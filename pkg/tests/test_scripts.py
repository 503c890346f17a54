import runpy
from pathlib import Path

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


def load(name):
    return runpy.run_path(str(SCRIPTS / name))


def test_expectation_study_flags_overshoot(capsys):
    mod = load("expectation_study.py")
    assert mod["run"](mod["StudyConfig"](seeds=5)) == 1
    assert "4,125/2,66,23," in capsys.readouterr().out


def test_asymptotic_family_small():
    mod = load("asymptotic_family.py")
    rows = mod["run"](mod["FamilyConfig"](degrees=(5,)))
    assert rows[0][1] <= rows[0][2]


def test_coloring_timing_runs():
    mod = load("coloring_timing.py")
    out = mod["run"](mod["TimingConfig"](graphs=2, exponents=(0, 6), repeats=1))
    assert set(out) == {0, 6}


def test_portfolio_bench_combined_is_best():
    mod = load("portfolio_bench.py")
    worst = mod["run"](mod["BenchConfig"](count=3))
    assert worst["combined"] <= min(v for k, v in worst.items() if k != "combined")
