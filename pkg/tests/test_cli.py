import json
import subprocess
import sys

import pytest

from judrs.cli import main


def test_optimal_location_stdout(capsys):
    assert main(["optimal-location"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# config_hash:")
    assert "d1_norm" in out


def test_bad_config_exit_code(capsys):
    assert main(["region", "--zeta", "1.5"]) == 2
    assert "zeta[0]" in capsys.readouterr().err


def test_param_rejection_exit_code(capsys):
    assert main(["region", "--param", "p_c_dbm=40"]) == 2
    err = capsys.readouterr().err
    assert "p_c_dbm" in err and "p_max_dbm" in err


def test_missing_seed(capsys):
    assert main(["dmt"]) == 2


def test_missing_config_file(tmp_path, capsys):
    assert main(["region", "--config", str(tmp_path / "nope.yaml")]) == 2


def test_runtime_error_exit_code(capsys):
    assert main(["relay-sweep", "--seed", "1", "--relays", "0"]) == 3


def test_outputs_and_artifacts(tmp_path):
    out = tmp_path / "region.csv"
    cfg = tmp_path / "c.yaml"
    cfg.write_text("zeta: [0.5]\ngrid: {nx: 11, ny: 11}\n")
    assert main(["region", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.exists()
    assert (tmp_path / "region.grid_zeta0.5.csv").exists()
    assert (tmp_path / "region.contours_zeta0.5.csv").exists()


def test_select_document(tmp_path):
    out = tmp_path / "sel.json"
    assert main(["select", "--seed", "3", "--relays", "3", "--format", "document", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["provenance"]["experiment"] == "select"
    assert json.loads((tmp_path / "sel.trace.json").read_text())["decision"]["mode"]


def test_sweep_reproducible_across_workers(tmp_path):
    args = ["relay-sweep", "--seed", "4", "--trials", "3000", "--relays", "1", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--workers", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "judrs", "optimal-location", "--zeta", "0.5"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and "0.5" in r.stdout


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2
