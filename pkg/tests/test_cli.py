import json

import numpy as np
import pytest

from asis_panel.cli import main
from asis_panel.data_io import write_long_csv
from asis_panel.model import PanelDataset


def test_theory_verdict(capsys):
    code = main(["theory", "--sigma-eps", "1", "--sigma-alpha", "1", "--T", "10", "--N", "10",
                 "--tau-sq", "100"])
    out = capsys.readouterr().out
    assert code == 0
    assert "SaFaster" in out
    assert json.loads(out.strip().splitlines()[-1])["verdict"] == "SaFaster"


def test_theory_json_and_summary(tmp_path, capsys):
    code = main(["theory", "--sigma-eps-sq", "100", "--sigma-alpha-sq", "1", "--N", "10", "--T", "10",
                 "--format", "json", "--out", str(tmp_path)])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0 and payload["rate_report"]["verdict"] == "AaFaster"
    assert json.loads((tmp_path / "summary.json").read_text()) == payload


def test_missing_draws_file(capsys):
    assert main(["diagnose", "missing.csv"]) == 2
    assert "missing.csv" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["theory", "--sigma-eps", "1", "--sigma-alpha", "1", "--N", "10", "--T", "10", "--bogus"],
    ["theory", "--sigma-alpha", "1", "--N", "10", "--T", "10"],
    ["nonsense"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1
    assert "usage error" in capsys.readouterr().err


def test_domain_error_is_usage(capsys):
    assert main(["theory", "--sigma-eps-sq", "-1", "--sigma-alpha", "1", "--N", "10", "--T", "10"]) == 1


def test_reproduce_tables_manifest(tmp_path, capsys):
    code = main(["reproduce-tables", "--seed", "42", "--out", str(tmp_path), "--iterations", "300",
                 "--burn-in", "50", "--replications", "2", "--threads", "1"])
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {f"table_{n}_{t}.csv" for n, t in [(10, 10), (10, 100), (500, 10), (500, 100)]} <= names
    assert {f"acf_{n}_{t}.csv" for n, t in [(10, 10), (10, 100), (500, 10), (500, 100)]} <= names
    assert "summary.json" in names
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["grid"]["base_seed"] == 42 and summary["grid"]["replications"] == 2


def test_simulate_and_diagnose_roundtrip(tmp_path, capsys):
    out = tmp_path / "sim"
    assert main(["simulate", "--pattern", "2", "--iterations", "2000", "--burn-in", "100",
                 "--seed", "3", "--out", str(out), "--format", "json"]) == 0
    sim = json.loads(capsys.readouterr().out)
    assert set(sim["diagnostics"]) == {"sa", "aa", "asis-sa-aa", "asis-aa-sa"}
    assert main(["diagnose", str(out / "draws.csv"), "--column", "mu_alpha_aa", "--burn-in", "100",
                 "--format", "json"]) == 0
    diag = json.loads(capsys.readouterr().out)["diagnostics"]
    assert diag["mcse"] == pytest.approx(sim["diagnostics"]["aa"]["mcse"], rel=1e-12)
    assert main(["diagnose", str(out / "draws.csv"), "--column", "nope"]) == 2


def test_fit_roundtrip(tmp_path, capsys):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(8, 6, 1))
    y = rng.normal(size=(8, 1)) + 2.0 * x[..., 0] + rng.normal(size=(8, 6))
    path = tmp_path / "panel.csv"
    write_long_csv(PanelDataset(y, covariates=x), path)
    out = tmp_path / "fit"
    assert main(["fit", str(path), "--scheme", "asis-sa-aa", "--iterations", "500", "--burn-in", "50",
                 "--out", str(out)]) == 0
    assert (out / "asis-sa-aa_draws.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    beta = summary["schemes"]["asis-sa-aa"]["posterior"]["beta_1"]["mean"]
    assert beta == pytest.approx(2.0, abs=0.5)
    capsys.readouterr()
    assert main(["diagnose", str(out / "asis-sa-aa_draws.csv"), "--column", "beta_1"]) == 0


def test_fit_collinear_is_numeric(tmp_path, capsys):
    x = np.random.default_rng(1).normal(size=(4, 3, 1))
    path = tmp_path / "c.csv"
    write_long_csv(PanelDataset(np.zeros((4, 3)), covariates=np.concatenate([x, 2 * x], axis=2)), path)
    assert main(["fit", str(path), "--iterations", "20", "--burn-in", "0", "--out", str(tmp_path)]) == 3


def test_fit_bad_csv_is_data_error(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("id,t,y\na,1,1\na,1,2\n")
    assert main(["fit", str(path), "--out", str(tmp_path)]) == 2
    assert "duplicate" in capsys.readouterr().err
