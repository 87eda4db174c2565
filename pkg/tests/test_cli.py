import json
import subprocess
import sys

import pytest

from cogbeam.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL, EXIT_OK, main


def _write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_solve_k2_exact(tmp_path):
    out = tmp_path / "r.json"
    assert main(["solve", "--config", "k2_paper", "--seed", "3", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["result"]["provenance"] == "ExactK2" and doc["seed"] == 3
    assert all(i <= e * (1 + 1e-6) for i, e in zip(doc["interference"], doc["epsilon"]))


def test_solve_k4_closed_form(tmp_path):
    cfg = _write(tmp_path, {"preset": "k4_paper", "interference": {"scenario": "S3"}})
    out = tmp_path / "r.json"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["result"]["provenance"] == "ClosedFormS3"


def test_solve_zero_delta_scenario3_is_infeasible(tmp_path):
    cfg = _write(tmp_path, {"preset": "k2_paper", "interference": {"scenario": "S3", "delta": 0}})
    out = tmp_path / "r.json"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == EXIT_INFEASIBLE
    doc = json.loads(out.read_text())
    assert doc["result"]["infeasible"] and doc["result"]["objective"] == 0.0
    assert all(v == [0.0, 0.0] for v in doc["result"]["t"])


def test_solve_numerical_trouble(tmp_path):
    cfg = _write(tmp_path, {"preset": "k2_paper", "sdp": {"max_iter": 1}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "r.json")]) == EXIT_NUMERICAL


def test_malformed_config_reports_field(tmp_path, capsys):
    cfg = _write(tmp_path, {"preset": "k2_paper", "antennas": {"N_S": "four"}})
    assert main(["solve", "--config", cfg]) == EXIT_CONFIG
    assert "antennas.N_S" in capsys.readouterr().err


def test_seed_environment_override(tmp_path, monkeypatch):
    monkeypatch.setenv("COGBEAM_SEED", "21")
    out = tmp_path / "r.json"
    main(["solve", "--config", "k2_paper", "--out", str(out)])
    assert json.loads(out.read_text())["seed"] == 21
    main(["solve", "--config", "k2_paper", "--seed", "2", "--out", str(out)])
    assert json.loads(out.read_text())["seed"] == 2


def test_sweep_writes_csv(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--config", "k2_paper", "--axis", "delta", "--from", "0", "--to", "0.1",
                 "--steps", "2", "--realizations", "10", "--out", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("scenario,epsilon_over_N0_db,delta") and len(lines) == 7


def test_sweep_bad_range_is_config_error(tmp_path):
    code = main(["sweep", "--config", "k2_paper", "--axis", "delta", "--from", "0", "--to", "1.2",
                 "--steps", "2", "--realizations", "10", "--out", str(tmp_path / "s.csv")])
    assert code == EXIT_CONFIG


def test_unknown_suite_rejected():
    with pytest.raises(SystemExit):
        main(["validate", "--suite", "nope"])


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "cogbeam", "solve", "--config", "k2_paper", "--out", str(out)],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["K"] == 2
