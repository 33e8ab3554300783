import csv
import json

import pytest

from bergtoep import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


def test_weights_check(capsys):
    code, rep = run(capsys, "weights", "check", "--weight", "pow:alpha=2")
    assert code == 0
    assert rep["classes"]["doubling_constant"] == pytest.approx(8, abs=1e-8)


def test_toeplitz_identity(capsys, tmp_path):
    path = tmp_path / "spec.csv"
    code, rep = run(capsys, "toeplitz", "spectrum", "--measure", "id", "--csv", str(path))
    assert code == 0 and rep["passed"]
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["index", "eigenvalue"]
    assert all(abs(float(v) - 1) <= 1e-9 for _, v in rows[1:])


def test_band_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "IDENTITY_TOL", -1.0)
    code, rep = run(capsys, "toeplitz", "spectrum", "--measure", "id", "--degree", "4")
    assert code == cli.EXIT_BAND and rep["passed"] is False


@pytest.mark.parametrize("argv", [
    ("weights", "check", "--weight", "nope:x=1"),
    ("carleson", "--measure", "delta:z=0.5", "--p", "0.5"),
    ("carleson", "--measure", "delta:z=1.5"),
    ("volterra",),
    ("suite", "--preset", "huge"),
])
def test_config_errors(capsys, argv):
    code, rep = run(capsys, *argv)
    assert code == cli.EXIT_CONFIG
    assert rep["error"]


def test_numeric_error_exit_code(capsys):
    code, rep = run(capsys, "partition", "emit", "--n", "2", "--kmax", "20")
    assert code == cli.EXIT_NUMERIC and rep["error"] == "DomainError"


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["carleson", "--n", "3"])
    assert exc.value.code == 2


def test_carleson_report_is_deterministic(capsys):
    argv = ("carleson", "--measure", "delta:z=0.5", "--kmax", "8", "--degree", "31")
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second
    code, rep = first
    assert code == 0
    assert rep["headline"] == pytest.approx(8.288717, rel=1e-6)
    assert rep["config"]["measure"] == "delta:z=0.5"
    assert list(rep["config"]) == sorted(rep["config"])


def test_measure_forms(capsys, tmp_path):
    path = tmp_path / "mu.json"
    path.write_text(json.dumps({"n": 2, "atoms": [{"z": [[0.5, 0], [0, 0]], "mass": 2}]}))
    code, rep = run(capsys, "berezin", "--n", "2", "--measure", str(path), "--kmax", "3")
    assert code == 0 and rep["headline"] > 0
    code, rep = run(capsys, "schatten", "--measure", "delta:z=0.5i;mass=2", "--kmax", "6",
                    "--p", "1", "--r", "0.5", "--degree", "31")
    assert code == 0
    # mass 2 doubles the dyadic sum of the unit point mass
    assert rep["headline"] == pytest.approx(2 * 12.098033, rel=1e-6)
    assert rep["section_schatten"] > 0 and rep["dyadic_over_integral"] > 0


def test_partition_cells(capsys, tmp_path):
    path = tmp_path / "cells.csv"
    code, rep = run(capsys, "partition", "emit", "--kmax", "4", "--cells", str(path))
    assert code == 0
    rows = list(csv.reader(path.open()))
    assert len(rows) - 1 == rep["n_cells"] == sum(rep["counts"])


def test_kernel_verify(capsys):
    code, rep = run(capsys, "kernel", "verify", "--weight", "std:alpha=1", "--n", "2",
                    "--pairs", "50", "--degree", "60")
    assert code == 0 and rep["passed"]
    assert rep["closed_form_max_rel_error"] <= 1e-8


def test_volterra(capsys):
    code, rep = run(capsys, "volterra", "--g", "z", "--p", "2", "--degree", "60", "--kmax", "8")
    assert code == 0
    assert rep["besov_integral"]["headline"] == pytest.approx(0.5, abs=1e-8)


def test_out_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    assert cli.main(["weights", "check", "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(path.read_text())["command"] == "weights"


def test_suite_subset(capsys):
    code, rep = run(capsys, "suite", "--only", "1,3")
    assert code == 0 and rep["passed"]
    assert [c["number"] for c in rep["checks"]] == [1, 3]
