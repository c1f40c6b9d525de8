import json
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import decoupled_attack, random_attack
from chernoffqkd import __version__, cli
from chernoffqkd.protocol import attack_to_dict, save_json, state_to_dict
from chernoffqkd.qmath import binary_entropy, ket, proj
from chernoffqkd.security import delta_k

SAMPLES = Path(__file__).resolve().parents[1] / "samples"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def write_state(path, m):
    save_json(state_to_dict(m), path)
    return path


def test_measures_identical_and_orthogonal(tmp_path, capsys):
    a = write_state(tmp_path / "a.json", proj(ket(1, 0)))
    b = write_state(tmp_path / "b.json", proj(ket(0, 1)))
    code, out, _ = run(capsys, "measures", a, a)
    r = rows(out)[0]
    assert code == 0
    assert float(r["d"]) == 0 and float(r["F"]) == pytest.approx(1) and float(r["Q"]) == pytest.approx(1)
    code, out, _ = run(capsys, "measures", a, b)
    r = rows(out)[0]
    assert (float(r["d"]), float(r["F"]), float(r["Q"])) == (1.0, 0.0, 0.0)


def test_measures_sample_pair_regression(capsys):
    code, out, _ = run(capsys, "measures", SAMPLES / "state_a.json", SAMPLES / "state_b.json")
    r = rows(out)[0]
    assert code == 0
    # scipy-oracle values, also frozen in test_divergence
    assert float(r["d"]) == pytest.approx(0.3741657386773941, abs=1e-9)
    assert float(r["F"]) == pytest.approx(0.924918590290899, abs=1e-9)
    assert float(r["Q"]) == pytest.approx(0.9241464232597859, abs=1e-9)


def test_measures_input_errors(tmp_path, capsys):
    a = write_state(tmp_path / "a.json", np.eye(2) / 2)
    c = write_state(tmp_path / "c.json", np.eye(3) / 3)
    assert run(capsys, "measures", a, c)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "measures", a, bad)
    assert code == 2 and "error" in err
    assert run(capsys, "measures", a, tmp_path / "missing.json")[0] == 2


def test_measures_invariant_violation(tmp_path, capsys, monkeypatch):
    a = write_state(tmp_path / "a.json", np.eye(2) / 2)
    monkeypatch.setattr(cli, "fidelity", lambda r, s: 0.1)
    assert run(capsys, "measures", a, a)[0] == 3


def test_analyze_decoupled_margin(tmp_path, capsys):
    path = tmp_path / "att.json"
    save_json(attack_to_dict(decoupled_attack(0.1)), path)
    code, out, _ = run(capsys, "analyze", path, "--k", "1-3")
    table = rows(out)
    assert code == 0
    for k, r in zip((1, 2, 3), table):
        assert int(r["k"]) == k
        assert float(r["margin"]) == pytest.approx(1 - binary_entropy(delta_k(0.1, k)), abs=1e-9)
    assert table[-1]["k"] == "verdict"
    assert "empirical, not certified" in out


def test_analyze_zero_qber(tmp_path, capsys):
    path = tmp_path / "att.json"
    save_json(attack_to_dict(decoupled_attack(0.0)), path)
    _, out, _ = run(capsys, "analyze", path, "--k", "1,2,4")
    assert [float(r["margin"]) for r in rows(out)[:-1]] == [1.0, 1.0, 1.0]


def test_analyze_insecure_verdict(tmp_path, capsys, rng):
    a = random_attack(rng, tied_cross=True, eps=0.49)  # beta close to 1
    path = tmp_path / "att.json"
    save_json(attack_to_dict(a), path)
    _, out, _ = run(capsys, "analyze", path, "--k", "1-2")
    assert "insecure (Thm 2)" in rows(out)[-1]["delta_k"]


def test_analyze_capacity_truncates(tmp_path, capsys):
    path = tmp_path / "att.json"
    save_json(attack_to_dict(decoupled_attack(0.1, d_e=46)), path)  # d_ET = 92, 92**2 > cap
    code, out, _ = run(capsys, "analyze", path, "--k", "1-3")
    table = rows(out)
    assert code == 0
    assert table[0]["k"] == "1" and table[1]["k"] == "warning" and table[2]["k"] == "verdict"


def test_threshold_exact(capsys):
    code, out, _ = run(capsys, "threshold", "--case", 2, "--condition", "suffQ", "--bound", "exact")
    r = rows(out)[0]
    assert code == 0 and r["bound"] == "exact_attack"
    assert abs(float(r["q_star"]) - (5 - math.sqrt(5)) / 10) <= 1e-4


def test_threshold_sdp_case1(capsys):
    code, out, _ = run(capsys, "threshold", "--case", 1, "--bound", "sdp", "--level", 2)
    assert code == 0
    assert float(rows(out)[0]["q_star"]) == pytest.approx(0.0771, abs=0.003)


def test_threshold_missing_is_exit_4(capsys):
    code, _, err = run(capsys, "threshold", "--case", 1, "--bound", "sdp", "--level", 1)
    assert code == 4 and "no threshold" in err


def test_threshold_rejects_necessary_with_sdp(capsys):
    assert run(capsys, "threshold", "--case", 1, "--bound", "sdp", "--condition", "neccQ")[0] == 2


def test_dibound_row(capsys):
    code, out, _ = run(capsys, "dibound", "--case", 2, "--q", 0.0)
    r = rows(out)[0]
    # no strictly feasible point at q = 0, so the iteration stalls on a certified bound
    assert code == 0 and r["status"] in ("optimal", "stalled")
    assert float(r["d_bound"]) <= 0.02


def test_simulate_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--eps", 0.15, "--k", "1-3", "--blocks", 20000, "--seed", 9]
    assert run(capsys, *args, "--out", a)[0] == 0
    assert run(capsys, *args, "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    head = a.read_text().splitlines()[0]
    assert head.startswith(f"# chernoffqkd {__version__} config=") and head.endswith("seed=9")


def test_config_file_matches_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eps": 0.15, "k": "1-3", "blocks": 20000, "seed": 9}))
    _, out_cfg, _ = run(capsys, "simulate", "--config", cfg)
    _, out_flags, _ = run(capsys, "simulate", "--eps", 0.15, "--k", "1-3", "--blocks", 20000, "--seed", 9)
    # same resolved parameters, so identical header hash and rows
    assert out_cfg == out_flags
    _, out_other, _ = run(capsys, "simulate", "--config", cfg, "--seed", 10)
    assert out_other.splitlines()[0] != out_cfg.splitlines()[0]


def test_config_errors(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert run(capsys, "simulate", "--config", cfg)[0] == 2
    cfg.write_text("[1, 2]")
    assert run(capsys, "simulate", "--config", cfg)[0] == 2


@pytest.mark.parametrize("argv", [
    ["simulate", "--eps", "0.7"],
    ["simulate", "--blocks", "0"],
    ["simulate", "--k", "0-2"],
    ["dibound", "--q", "-0.1"],
    ["threshold", "--tol", "0"],
])
def test_invalid_parameters(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_parse_failure_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--case", "9"])
    assert exc.value.code == 2


def test_attack_command_round_trip(tmp_path, capsys):
    path = tmp_path / "att.json"
    assert run(capsys, "attack", "--case", 3, "--q", 0.1, "--out", path)[0] == 0
    code, out, _ = run(capsys, "analyze", path, "--k", "1-2")
    assert code == 0 and len(rows(out)) == 3


def test_scan_grid(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"case": 2, "condition": "suffF", "grid": [0.1, 0.3]}))
    code, out, _ = run(capsys, "scan", "--config", cfg)
    table = rows(out)
    assert code == 0 and len(table) == 2
    assert float(table[0]["margin"]) > 0 > float(table[1]["margin"])
