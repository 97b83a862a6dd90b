"""Command-line interface: config round trip, outputs, exit codes."""
import csv
import json

import pytest

from qpgordon.cli import ExperimentConfig, main


def _run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "-o", str(out)])
    return code, out


def test_config_roundtrip():
    cfg = ExperimentConfig(phases=("0.15", "1/3"), energies=("-1:1:5",), epsilon=0.05,
                           q_list=("3", "94"))
    assert ExperimentConfig.from_ini(cfg.to_ini()) == cfg


def test_config_unknown_key(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[experiment]\nfoo = 1\n")
    assert main(["contfrac", "--config", str(p), "-o", str(tmp_path / "o")]) == 1


def test_contfrac_output(tmp_path):
    code, out = _run(tmp_path, "contfrac", "--depth", "10")
    assert code == 0
    rows = list(csv.DictReader((out / "contfrac.csv").open()))
    assert [int(r["q_k"]) for r in rows[:6]] == [1, 2, 3, 5, 8, 13]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["exit_code"] == 0 and "contfrac.csv" in manifest["outputs"]


def test_bad_specs_exit_1(tmp_path, capsys):
    assert main(["contfrac", "--alpha", "surd:(sqrt(5)-1/2", "-o", str(tmp_path / "a")]) == 1
    assert "^" in capsys.readouterr().err
    assert main(["spectrum", "--potential", "wobble", "-o", str(tmp_path / "b")]) == 1
    assert main(["nonsense"]) == 1


def test_numeric_failure_exit_4(tmp_path):
    code, _ = _run(tmp_path, "lyapunov", "--depth", "5", "--n", "100000")
    assert code == 4


@pytest.mark.parametrize("sub, files", [
    ("discrepancy", ["discrepancy.csv"]),
    ("variation", ["variation.csv"]),
    ("lyapunov", ["lyapunov.csv"]),
    ("spectrum", ["eigenvalues.csv"]),
    ("regime-scan", ["regime_scan.csv"]),
])
def test_subcommands_write_outputs(tmp_path, sub, files):
    args = [sub, "--n", "128", "--phases", "8", "--box-half-width", "20"]
    if sub == "regime-scan":
        args += ["--energy=-1:1:3"]
    code, out = _run(tmp_path, *args)
    assert code == 0
    for name in files:
        assert (out / name).stat().st_size > 0


def test_uniform_bound_small(tmp_path):
    code, out = _run(tmp_path, "uniform-bound", "--potential", "cos:2", "--n", "256",
                     "--phases", "32")
    assert code in (0, 3)
    data = json.loads((out / "uniform_bound.json").read_text())
    assert data["results"]


def test_gordon_check_exit_codes(tmp_path):
    code, out = _run(tmp_path, "gordon-check", "--alpha", "liouville:beta=1.5", "--energy", "mid")
    assert code == 3
    rep = json.loads((out / "gordon_report.json").read_text())
    assert rep["verdict"] == "INCONCLUSIVE(q too small)"
    code, _ = _run(tmp_path, "gordon-check", "--energy", "0", "-o", str(tmp_path / "g"))
    assert code == 2


def test_gordon_check_deterministic(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}"
        assert main(["gordon-check", "--alpha", "liouville:beta=1.5", "--energy", "mid",
                     "-o", str(out)]) == 3
        outs.append(out)
    for name in ("gordon_report.json", "gordon_summary.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_write_config(tmp_path):
    p = tmp_path / "eff.ini"
    code, _ = _run(tmp_path, "contfrac", "--depth", "7", "--write-config", str(p))
    assert code == 0
    assert ExperimentConfig.from_ini(p.read_text()).depth == 7
