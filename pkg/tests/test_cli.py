import json

import numpy as np
import pytest

from bosoncert.cli import main
from bosoncert.report import read_csv
from bosoncert.rmt import rmt_statistics
from bosoncert.unitary import matrix_from_json, unitarity_residual


def test_predict(capsys):
    assert main(["predict", "--species", "all", "-n", "6", "-m", "120"]) == 0
    records = json.loads(capsys.readouterr().out)
    assert [r["species"] for r in records] == ["boson", "fermion", "dist", "simboson"]
    assert records[0]["nm"] == pytest.approx(rmt_statistics("boson", 6, 120).nm, rel=1e-15)


def test_predict_aliases(capsys):
    assert main(["predict", "--species", "distinguishable", "-n", "3", "-m", "100"]) == 0
    (rec,) = json.loads(capsys.readouterr().out)
    assert rec["nm"] == pytest.approx(-100 / 101, rel=1e-15)


def test_domain_error_exit(capsys):
    assert main(["predict", "-n", "6", "-m", "6"]) == 3
    assert "bosoncert:" in capsys.readouterr().err


def test_config_error_exits():
    assert main(["sweep", "-m", "20:10:5"]) == 2
    assert main(["predict", "--species", "photon", "-m", "10"]) == 2
    assert main(["certify", "--cloud", "nowhere.csv"]) == 2


def test_histogram_outputs(tmp_path, capsys):
    out = tmp_path / "h"
    assert main(["histogram", "-n", "3", "-m", "12", "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert "histogram_summary.json" in names and "cdataset_boson.csv" in names
    rows = read_csv(out / "cdataset_fermion.csv")
    assert len(rows) == 66 and list(rows[0]) == ["i", "j", "value"]
    assert (out / "cdataset_boson.csv").read_text().startswith("# ")


def test_sweep_outputs(tmp_path):
    out = tmp_path / "s"
    assert main(["sweep", "-n", "2", "-m", "6:10:2", "--trials", "5", "--out", str(out)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert len(rows) == 12 and rows[0]["species"] == "boson"


def test_scatter_then_certify(tmp_path, capsys):
    out = tmp_path / "c"
    assert main(["scatter", "-n", "4", "-m", "16", "--trials", "25", "--out", str(out)]) == 0
    summary = json.loads((out / "scatter_summary.json").read_text())
    assert summary["m"] == 16 and len(summary["repetitions"]) == 1
    capsys.readouterr()
    assert main(["certify", "-n", "4", "-m", "16", "--cloud", str(out / "cloud_boson.csv"),
                 "--out", str(out)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc["distances"]) == {"boson", "fermion", "dist", "simboson"}
    assert json.loads((out / "verdict.json").read_text())["k"] == 4


def test_haar_gen(tmp_path):
    path = tmp_path / "u.json"
    assert main(["haar-gen", "-m", "7", "--seed", "3", "--out", str(path)]) == 0
    u = matrix_from_json(json.loads(path.read_text()))
    assert u.shape == (7, 7) and unitarity_residual(u) < 1e-12
    sub_path = tmp_path / "sub.json"
    assert main(["haar-gen", "-m", "7", "--seed", "3", "--inputs", "2,5", "--out", str(sub_path)]) == 0
    sub = matrix_from_json(json.loads(sub_path.read_text()))
    np.testing.assert_array_equal(sub, u[[1, 4]])
    assert main(["haar-gen", "-m", "7", "--inputs", "5,2"]) == 3


def test_oracle_check_exit_codes(capsys):
    args = ["oracle-check", "--n-max", "2", "--m-max", "3", "--draws", "2", "--phase-samples", "5000"]
    assert main(args) == 0
    assert main(args + ["--inject-perturbation"]) == 4
    assert "FAIL equivalence[boson]" in capsys.readouterr().out
