import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from puritycrit import cli
from puritycrit.errors import TraceNotOne
from puritycrit.states import noisy_ghz, random_mixed


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def bell_file(tmp_path, capsys):
    path = tmp_path / "bell.json"
    assert cli.main(["make-state", "bell", "--out", str(path)]) == 0
    return path


def test_state_roundtrip_bit_identical(tmp_path):
    rho = random_mixed("hs", (2, 3), np.random.default_rng(4))
    path = tmp_path / "s.json"
    cli.write_state(rho, path)
    back = cli.read_state(path)
    assert back.dims == rho.dims
    assert np.array_equal(back.matrix, rho.matrix)
    # and the text is stable under a second round trip
    assert cli.state_to_json(back) == path.read_text()


def test_parse_error_reports_position():
    with pytest.raises(cli.StateFileError) as e:
        cli.parse_state('{"dims": [2],\n "matrix": [[1, 0]')
    assert e.value.line == 2
    assert "line 2" in str(e.value)


@pytest.mark.parametrize("text", ['{"dims": [2]}', '{"dims": "2", "matrix": []}',
                                  '{"dims": [2], "matrix": [[1, 0], [0, 0]]}'])
def test_malformed_state_files(text):
    with pytest.raises(cli.StateFileError):
        cli.parse_state(text)


def test_trace_check_in_state_file():
    bad = {"dims": [2], "matrix": [[[0.45, 0], [0, 0]], [[0, 0], [0.45, 0]]]}
    with pytest.raises(TraceNotOne):
        cli.parse_state(json.dumps(bad))


def test_criterion_bell(bell_file, capsys):
    code, out, _ = run(["criterion", str(bell_file), "--partition", "0|1"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["verdicts"]["ksep"] == "violated"
    assert rep["tnorm2_direct"] == pytest.approx(3.0)
    assert rep["tnorm2_purities"] == pytest.approx(3.0)
    assert rep["threshold"] == 1
    assert rep["chsh"]["verdict"] == "violated"
    assert {"subset": [0, 1], "purity": pytest.approx(1.0)} in rep["purities"]


def test_criterion_maximally_mixed(tmp_path, capsys):
    path = tmp_path / "mm.json"
    cli.main(["make-state", "mixed", "--dims", "2,2", "--out", str(path)])
    code, out, _ = run(["criterion", str(path), "--partition", "0|1"], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["verdicts"]["ksep"] == "satisfied"
    assert rep["tnorm2_direct"] == pytest.approx(0.0, abs=1e-15)


def test_criterion_ghz3(tmp_path, capsys):
    path = tmp_path / "ghz.json"
    cli.write_state(noisy_ghz(3, 1.0), path)
    code, out, _ = run(["criterion", str(path), "--partition", "0|1|2"], capsys)
    rep = json.loads(out)
    assert rep["gme"]["bound"] == 3.0
    assert rep["gme"]["verdict"] == "violated"
    assert rep["gme"]["tnorm2"] == pytest.approx(4.0)


def test_criterion_bad_partition(bell_file, capsys):
    code, _, err = run(["criterion", str(bell_file), "--partition", "0|0"], capsys)
    assert code == cli.EXIT_USAGE
    assert "InvalidPartition" in err
    code, _, err = run(["criterion", str(bell_file), "--partition", "0|2"], capsys)
    assert code == cli.EXIT_USAGE


def test_criterion_to_file(bell_file, tmp_path, capsys):
    out = tmp_path / "r" / "rep.json"
    assert cli.main(["criterion", str(bell_file), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["partition"] == "0|1"


def test_sweep_werner(tmp_path, capsys):
    stem = tmp_path / "w"
    code, out, _ = run(["sweep", "werner", "--grid", "400", "--out", str(stem)], capsys)
    assert code == 0
    assert "0.577350269" in out and "0.707106781" in out
    side = json.loads((tmp_path / "w.json").read_text())
    assert side["metadata"]["run_config"]["seed"] == 0
    assert (tmp_path / "w.csv").read_text().startswith("omega,")


def test_sweep_costs(tmp_path, capsys):
    code, out, _ = run(["sweep", "costs", "--k", "6", "--qubits", "--out", str(tmp_path / "c")], capsys)
    assert code == 0
    assert "729 vs 63" in out


def test_sweep_ghz_columns(tmp_path, capsys):
    code, _, _ = run(["sweep", "ghz", "--n", "4", "--grid", "21", "--partitions", "all",
                      "--out", str(tmp_path / "g")], capsys)
    assert code == 0
    with open(tmp_path / "g.csv", newline="") as fh:
        header = next(csv.reader(fh))
    assert sum(h.startswith("delta[") for h in header) == 15
    side = json.loads((tmp_path / "g.json").read_text())
    assert len(side["summary"]["partitions"]) == 15


@pytest.mark.parametrize("argv", [
    ["sweep", "werner", "--grid", "0"],
    ["sweep", "nope"],
    ["sweep", "bd-geometry", "--workers", "0"],
    ["sweep", "werner", "--tol", "herm"],
    ["validate", "--samples", "0"],
    [],
])
def test_usage_errors(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(argv, capsys)
    assert code == cli.EXIT_USAGE
    assert err


def test_workers_env(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    assert cli.resolve_workers(None) == 3
    assert cli.resolve_workers(2) == 2
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    with pytest.raises(cli.UsageError):
        cli.resolve_workers(None)


def test_tolerance_overrides():
    assert cli.parse_tolerances("herm=1e-9, psd=1e-8") == {"herm": 1e-9, "psd": 1e-8}
    with pytest.raises(cli.UsageError):
        cli.parse_tolerances("psd=-1")


def test_validate_ok(capsys):
    code, out, _ = run(["validate", "--samples", "3"], capsys)
    assert code == 0
    assert "0 failed" in out


def test_validate_corrupted_state(tmp_path, capsys):
    bad = {"dims": [2, 2], "matrix": [[[0.9 / 4 if i == j else 0, 0] for j in range(4)] for i in range(4)]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    code, _, err = run(["validate", "--samples", "1", "--state", str(path)], capsys)
    assert code == cli.EXIT_VALIDATION
    assert "TraceNotOne" in err


def test_make_state_kinds(tmp_path, capsys):
    for argv in (["werner", "--param", "0.5"], ["ghz", "--n", "3", "--param", "0.4"],
                 ["bd", "--t", "0.1", "0.2", "-0.3"], ["random", "--ensemble", "bures"],
                 ["random", "--ensemble", "fixed", "--param", "0.6", "--dims", "2,3"]):
        path = tmp_path / "s.json"
        assert cli.main(["make-state", *argv, "--out", str(path)]) == 0
        cli.read_state(path)
    assert cli.main(["make-state", "bd", "--t", "1", "1", "1"]) == cli.EXIT_VALIDATION


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "puritycrit", "sweep", "costs", "--k", "3",
                          "--out", str(tmp_path / "c")], capture_output=True, text=True)
    assert out.returncode == 0
    assert "qubits: 27 vs 7" in out.stdout
