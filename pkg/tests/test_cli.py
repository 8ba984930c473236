import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from cfmm.cli import main

ROOT = Path(__file__).parent.parent
NO_DRIFT = ROOT / "scenarios" / "no_drift.yaml"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def simulate(tmp_path, capsys, *extra, name="run"):
    out = tmp_path / name
    code, _, err = run(["simulate", NO_DRIFT, "--out", out, *extra], capsys)
    assert code == 0, err
    return out


def test_simulate_writes_documented_columns(tmp_path, capsys):
    out = simulate(tmp_path, capsys, "--steps", "50")
    with open(out / "timeseries.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "m_p", "m_u", "band_lo", "band_hi", "R_alpha", "R_beta", "k",
                       "uni_supply", "utility_lp", "utility_retail", "utility_arb", "m_p_pre"]
    assert len(rows) == 52 and rows[1][0] == "0" and rows[-1][0] == "50"
    raw = (out / "timeseries.csv").read_bytes()
    assert b"\r" not in raw
    raw.decode("utf-8")


def test_report_recomputable_from_csv(tmp_path, capsys):
    out = simulate(tmp_path, capsys, "--steps", "2000")
    report = json.loads((out / "report.json").read_text())
    with open(out / "timeseries.csv", newline="") as fh:
        rows = [{k: float(v) for k, v in r.items()} for r in csv.DictReader(fh)]
    g = report["gamma"]
    moved = [r for r in rows if r["step"] >= 1]
    inside = sum(g * r["m_p_pre"] * (1 - 1e-9) <= r["m_u"] <= r["m_p_pre"] / g * (1 + 1e-9) for r in moved)
    assert report["band_fraction"] == pytest.approx(inside / len(moved), abs=1e-9)
    assert report["band_fraction"] >= 0.99
    last = rows[-1]
    for key in ("m_p", "m_u", "R_alpha", "R_beta", "k", "uni_supply"):
        assert report["final"][key] == pytest.approx(last[key], rel=1e-9)
    assert report["final_utilities"]["lp"] == pytest.approx(last["utility_lp"], rel=1e-9)
    assert report["initial_lp_utilities"] == {"lp": report["final_utilities"]["lp"]}
    assert report["arbitrageur_profit"] == pytest.approx(last["utility_arb"], rel=1e-9)
    assert report["seed"] == 42
    # band columns are the post-noise band of m_p
    assert last["band_lo"] == pytest.approx(g * last["m_p"]) and last["band_hi"] == pytest.approx(last["m_p"] / g)


def test_same_seed_identical_bytes_and_seed_override(tmp_path, capsys):
    a = simulate(tmp_path, capsys, "--steps", "300", name="a")
    b = simulate(tmp_path, capsys, "--steps", "300", name="b")
    c = simulate(tmp_path, capsys, "--steps", "300", "--seed", "43", name="c")
    assert (a / "timeseries.csv").read_bytes() == (b / "timeseries.csv").read_bytes()
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "timeseries.csv").read_bytes() != (c / "timeseries.csv").read_bytes()
    assert json.loads((c / "report.json").read_text())["seed"] == 43


def test_steps_zero_header_plus_initial_row(tmp_path, capsys):
    out = simulate(tmp_path, capsys, "--steps", "0")
    lines = (out / "timeseries.csv").read_text().splitlines()
    assert len(lines) == 2 and lines[1].startswith("0,1.0,1.0,")
    assert json.loads((out / "report.json").read_text())["band_fraction"] is None


def test_record_every(tmp_path, capsys):
    sc = tmp_path / "s.yaml"
    sc.write_text(NO_DRIFT.read_text().replace("record_every: 1", "record_every: 10"))
    code, _, _ = run(["simulate", sc, "--steps", "25", "--out", tmp_path / "o"], capsys)
    assert code == 0
    steps = [line.split(",")[0] for line in (tmp_path / "o" / "timeseries.csv").read_text().splitlines()[1:]]
    assert steps == ["0", "10", "20", "25"]


def test_invalid_scenario_exit_1_with_line(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("seed: 1\nsteps: 5\nagents:\n  - type: initial_lp\n    name: lp\n    alpha: 1\n    beta: 1\n    colour: red\n")
    code, _, err = run(["simulate", bad], capsys)
    assert code == 1
    assert f"{bad}:8: agents.0.initial_lp.colour: unknown key" in err
    code, _, err = run(["simulate", tmp_path / "missing.yaml"], capsys)
    assert code == 1


def test_scenario_semantic_error_exit_1(tmp_path, capsys):
    bad = tmp_path / "dup.yaml"
    bad.write_text("seed: 1\nsteps: 5\nagents:\n  - {type: initial_lp, name: a, alpha: 1, beta: 1}\n"
                   "  - {type: arbitrageur, name: a}\n")
    code, _, err = run(["simulate", bad], capsys)
    assert code == 1 and "unique" in err


def test_arbitrage_worked_example(capsys):
    code, out, _ = run(["arbitrage", "--ralpha", 100, "--rbeta", 100, "--gamma", 1, "--mp", 4, "--json"], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["delta_alpha"] == pytest.approx(50.0) and d["profit"] == pytest.approx(100.0)
    assert d["in_band"] is False
    assert d["m_u_after"] == pytest.approx(4.0) and d["in_band_after"] is True


def test_arbitrage_in_band_and_heavy_penalty(capsys):
    _, out, _ = run(["arbitrage", "--ralpha", 100, "--rbeta", 100, "--mp", 1, "--json"], capsys)
    assert json.loads(out)["delta_alpha"] == 0.0
    _, out, _ = run(["arbitrage", "--ralpha", 100, "--rbeta", 100, "--gamma", 1, "--mp", 4,
                     "--penalty", "quadratic", "--rho", "1e9", "--json"], capsys)
    assert json.loads(out)["delta_alpha"] < 1e-8
    code, out, _ = run(["arbitrage", "--ralpha", 100, "--rbeta", 100, "--gamma", 1, "--mp", 4,
                        "--penalty", "impact", "--eta", "0.01"], capsys)
    assert code == 0 and "delta_alpha" in out


def test_arbitrage_usage_errors(capsys):
    assert run(["arbitrage", "--ralpha", 1], capsys)[0] == 1
    assert run(["arbitrage", "--ralpha", -1, "--rbeta", 1, "--mp", 1], capsys)[0] == 1
    assert run(["arbitrage", "--ralpha", 1, "--rbeta", 1, "--mp", 1, "--penalty", "quadratic"], capsys)[0] == 1
    assert run(["arbitrage", "--ralpha", "x", "--rbeta", 1, "--mp", 1], capsys)[0] == 1


@pytest.mark.parametrize("argv, key, expected", [
    (["manipulation", "--rbeta", 1000, "--eps", 3], "cost", 500.0),
    (["gbm", "--k", 10000, "--mu", 0, "--sigma", 0], "expected_value", 200.0),
    (["split", "--gamma", 1, "--ralpha", 100, "--rbeta", 100, "--d1", 1, "--d2", 2], "deficit", 0.0),
    (["price-gap", "--ralpha", 100, "--ralpha-prime", 200, "--m-u", 1, "--gamma", 1, "--dalpha", 1],
     "leading_order", 0.005),
    (["lp-returns", "--prices", "1,4,9", "--k", 100], "relative_gain", 3.0),
])
def test_analyze(capsys, argv, key, expected):
    code, out, _ = run(["analyze", *argv, "--json"], capsys)
    assert code == 0
    assert json.loads(out)[key] == pytest.approx(expected, abs=1e-12)


def test_analyze_monte_carlo_and_errors(capsys):
    code, out, _ = run(["analyze", "gbm", "--k", 1e4, "--mu", 0.1, "--sigma", 0.5, "--paths", 1000, "--json"], capsys)
    d = json.loads(out)
    assert code == 0 and d["mc_paths"] == 1000 and math.isfinite(d["mc_std_error"])
    assert run(["analyze", "manipulation", "--rbeta", 1, "--eps", -1], capsys)[0] == 1
    assert run(["analyze", "lp-returns", "--prices", "1,a"], capsys)[0] == 1
    assert run(["analyze", "nope"], capsys)[0] == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cfmm", "analyze", "manipulation", "--rbeta", "1",
                           "--eps", "3"], capture_output=True, text=True)
    assert proc.returncode == 0 and "0.5" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "cfmm"], capture_output=True, text=True)
    assert proc.returncode == 1
