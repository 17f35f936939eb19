import hashlib
import json

import numpy as np
import pytest

from recrisk.cli import main, parse_grid, parse_level
from recrisk.recovery import RecoveryFunction
from recrisk.stress import TwoStateCase, two_state_measures, two_state_sample
from recrisk.samples import write_scenario_csv


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_parse_level_accepts_percent_and_decimal():
    assert parse_level("0.5%") == 0.005
    assert parse_level("0.005") == 0.005
    assert parse_level(" 2.5% ") == 0.025


def test_parse_grid_forms():
    assert np.allclose(parse_grid("0.1:0.9:5"), np.linspace(0.1, 0.9, 5))
    assert np.allclose(parse_grid("1,2,5"), [1.0, 2.0, 5.0])


def test_unknown_command_exits_one(capsys):
    assert main(["definitely-not-a-command"]) == 1
    assert main(["measure", "--scenarios", "missing.csv", "--measure", "var"]) == 1


def test_simulate_deterministic(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["simulate", "--M", "300", "--seed", "11", "--out", str(out1)]) == 0
    assert main(["simulate", "--M", "300", "--seed", "11", "--out", str(out2)]) == 0
    assert sha(out1) == sha(out2)
    assert main(["simulate", "--M", "300", "--seed", "12", "--out", str(out2)]) == 0
    assert sha(out1) != sha(out2)


def test_measure_two_state_file_matches_closed_form(tmp_path):
    case = TwoStateCase(k=30.0, alpha=0.01, beta=0.004, r=0.8)
    closed = two_state_measures(case)
    scen = tmp_path / "s.csv"
    with open(scen, "w", encoding="utf-8") as fh:
        write_scenario_csv(two_state_sample(case), fh)
    gamma_file = tmp_path / "g.json"
    gamma_file.write_text(RecoveryFunction.two_piece(0.004, 0.8, 0.01).to_json())
    out = tmp_path / "out.json"
    assert main(["measure", "--scenarios", str(scen), "--gamma", str(gamma_file),
                 "--measure", "reavar", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["value"] == pytest.approx(closed.reavar, abs=1e-9)
    assert main(["measure", "--scenarios", str(scen), "--gamma", str(gamma_file),
                 "--measure", "revar", "--E0", "0.0", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["value"] == pytest.approx(closed.revar, abs=1e-9)
    assert payload["solvency_pass"] == (closed.revar <= 0.0)


def test_round_trip_simulate_measure_recadj_allocate(tmp_path):
    scen = tmp_path / "s.csv"
    assert main(["simulate", "--M", "4000", "--seed", "3", "--out", str(scen)]) == 0
    gamma_file = tmp_path / "g.json"
    gamma_file.write_text(RecoveryFunction.two_piece(0.001, 0.8, 0.005).to_json())
    out = tmp_path / "m.json"
    assert main(["measure", "--scenarios", str(scen), "--gamma", str(gamma_file),
                 "--measure", "revar", "--out", str(out)]) == 0
    assert main(["measure", "--scenarios", str(scen), "--gamma", str(gamma_file),
                 "--measure", "lrevar", "--E0", "6.5", "--out", str(out)]) == 0
    assert main(["recadj", "eval", "--scenarios", str(scen), "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["SolvencyII"]["agg_rec_adj_mean"] >= 1.0
    assert main(["allocate", "--scenarios", str(scen), "--gamma", str(gamma_file),
                 "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert len(payload["kappa"]) == 1


def test_recadj_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["recadj", "sweep", "--rho", "0.2:0.8:2", "--tau", "1:3:2",
                 "--regime", "sii", "--M", "2000", "--seed", "5",
                 "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("rho,tau,regime,loss_prob,reg_capital")
    assert len(lines) == 1 + 4


def test_stress_commands(tmp_path):
    out = tmp_path / "peaked.json"
    assert main(["stress", "peaked", "--a", "10", "--b", "40", "--c", "60",
                 "--k", "12", "--E0", "4", "--beta", "0.25%", "--r", "0.8",
                 "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["q_beta"] == pytest.approx(50.0)
    assert payload["revar"] == pytest.approx(32.0)
    assert payload["rec_adj_var"] == pytest.approx(16.0)
    assert main(["stress", "extremal", "--regime", "avar", "--smin", "1.2",
                 "--smax", "3", "--beta", "0.25%", "--r", "0.8", "--E0", "6",
                 "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["achieved_adjustment"] == pytest.approx(3.0, abs=1e-9)
    assert all(payload["constraints"].values())
    # infeasible construction -> numerical failure exit code
    assert main(["stress", "extremal", "--regime", "avar", "--smin", "1.2",
                 "--smax", "3", "--beta", "0.1%", "--r", "0.8", "--E0", "6"]) == 2


def test_calibrate_emits_recovery_function(tmp_path):
    out = tmp_path / "gamma.json"
    assert main(["calibrate", "--mu-de", "0", "--sd-de", "1", "--mu-l", "10",
                 "--sd-l", "2", "--alpha", "1%", "--pieces", "8",
                 "--out", str(out)]) == 0
    gamma = RecoveryFunction.from_json(out.read_text())
    assert gamma.n_pieces <= 8


def test_allocate_ambiguous_tie_exit_code(tmp_path):
    scen = tmp_path / "div.csv"
    scen.write_text("weight,dE_1,dE_2,L_1,L_2\n"
                    "0.5,0.0,0.0,0.0,0.0\n0.5,0.0,0.0,0.0,0.0\n")
    gamma_file = tmp_path / "g.json"
    gamma_file.write_text(RecoveryFunction.two_piece(0.05, 0.6, 0.25).to_json())
    assert main(["allocate", "--scenarios", str(scen), "--gamma", str(gamma_file)]) == 2


def test_frontier_command(tmp_path):
    rng = np.random.default_rng(9)
    m = 40
    lines = ["weight,R_1,R_2,Z"]
    for i in range(m):
        r1, r2 = rng.normal(0.04, 0.12), rng.normal(0.02, 0.05)
        z = rng.uniform(0, 0.2)
        lines.append(f"{1.0 / m!r},{r1!r},{r2!r},{z!r}")
    problem = tmp_path / "p.csv"
    problem.write_text("\n".join(lines) + "\n")
    config = tmp_path / "c.json"
    config.write_text(json.dumps({
        "budget": 100.0,
        "gamma": {"breakpoints": [0.6], "levels": [0.02, 0.1]},
        "c_grid": [0.025, 0.03, 0.035],
    }))
    out = tmp_path / "f.csv"
    assert main(["frontier", "--problem", str(problem), "--config", str(config),
                 "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "c,risk,upsilon,x_1,x_2,status"
    assert len(lines) == 4


def test_selftest_passes():
    assert main(["selftest"]) == 0
