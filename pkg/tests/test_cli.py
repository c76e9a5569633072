import json
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import DATA

TOY = str(DATA / "toy_a.txt")


def cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "chargenet.cli"] + list(args),
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="module")
def solved_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    res = cli("solve", "--instance", TOY, "--out", str(out),
              "--max-iter", "60")
    assert res.returncode == 0, res.stderr
    return out


def test_solve_writes_bundle(solved_run):
    names = {p.name for p in solved_run.iterdir()}
    assert {"summary.json", "design.csv", "prices.csv", "occupancy.csv",
            "max_segment.csv", "objective.csv",
            "iterations.csv"} <= names
    summary = json.loads((solved_run / "summary.json").read_text())
    assert summary["status"] == "converged"
    assert summary["net"] == pytest.approx(-1075.0, abs=1e-3)
    assert summary["lbd"] <= summary["net"] + 1e-6
    assert summary["ubd"] == pytest.approx(summary["net"], abs=1e-9)
    lines = (solved_run / "iterations.csv").read_text().strip().splitlines()
    assert lines[0].startswith("k,")
    assert len(lines) - 1 == summary["iterations"]


def test_evaluate_round_trip(solved_run, tmp_path):
    out = tmp_path / "eval"
    res = cli("evaluate", "--instance", TOY, "--design", str(solved_run),
              "--out", str(out))
    assert res.returncode == 0, res.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert summary["net"] == pytest.approx(-1075.0, abs=1e-3)


def test_report_renders(solved_run, tmp_path):
    out = tmp_path / "charts"
    res = cli("report", "--run", str(solved_run), "--out", str(out))
    assert res.returncode == 0, res.stderr
    for name in ("convergence.svg", "prices.svg", "occupancy.svg",
                 "max_segment.svg", "summary.txt"):
        assert (out / name).exists(), name
    svg = (out / "convergence.svg").read_text()
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_oracle_matches_solver(solved_run, tmp_path):
    res = cli("oracle", "--instance", TOY, "--out", str(tmp_path), "--dump")
    assert res.returncode == 0, res.stderr
    assert "-1074.99" in res.stdout or "-1075" in res.stdout
    assert (tmp_path / "oracle.csv").exists()


def test_exit_codes_config_gate(tmp_path):
    # the tolerance gate must fire before the instance is even read:
    # pass a nonexistent file along with an impossible tolerance pair
    res = cli("solve", "--instance", str(tmp_path / "missing.txt"),
              "--out", str(tmp_path / "o"), "--eps-u", "1e-6",
              "--eps-l", "-1.0")
    assert res.returncode == 4
    assert "eps" in res.stderr.lower()


def test_exit_code_missing_instance(tmp_path):
    res = cli("solve", "--instance", str(tmp_path / "missing.txt"),
              "--out", str(tmp_path / "o"))
    assert res.returncode == 4
    assert "cannot read" in res.stderr


def test_exit_code_infeasible(tmp_path):
    bad = tmp_path / "island.txt"
    text = Path(TOY).read_text()
    # fixed demand with no candidate sites: unreachable within range
    text = text.replace("1, 4, 4.4, 4.4, 0.08", "1, 4, 4.4, 4.4, 0")
    lines = [ln for ln in text.splitlines()
             if not ln.startswith(("2, 1130", "3, 750"))]
    bad.write_text("\n".join(lines) + "\n")
    res = cli("solve", "--instance", str(bad), "--out", str(tmp_path / "o"))
    assert res.returncode == 3
    assert "unreachable" in res.stderr


def test_exit_code_not_converged(tmp_path):
    res = cli("solve", "--instance", TOY, "--out", str(tmp_path / "o"),
              "--max-iter", "1")
    assert res.returncode == 2


def test_generate_then_solve_parses(tmp_path):
    inst = tmp_path / "gen.txt"
    res = cli("generate", "--template", "toy", "--seed", "9",
              "--out", str(inst))
    assert res.returncode == 0, res.stderr
    from chargenet.network import load_instance
    loaded = load_instance(inst)
    assert loaded.params.T == 2


def test_simulate_queue_stable(tmp_path):
    res = cli("simulate-queue", "--xi", "0.5", "--eta", "1",
              "--samples", "20000", "--seed", "1")
    assert res.returncode == 0, res.stderr
    assert "empirical" in res.stdout and "closed form" in res.stdout


def test_simulate_queue_unstable():
    res = cli("simulate-queue", "--xi", "2.0", "--eta", "1")
    assert res.returncode == 4
    assert "unstable" in res.stderr


def test_report_compare(solved_run, tmp_path):
    out = tmp_path / "cmp"
    res = cli("report", "--run", str(solved_run), "--out", str(out),
              "--compare", str(solved_run))
    assert res.returncode == 0, res.stderr
    stats = (out / "price_stats.csv").read_text()
    assert "pct_diff" in stats
