import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from skewfit._validation import DataError
from skewfit.cli import main
from skewfit.distributions import SkewNormalParams
from skewfit.gibbs import GibbsConfig, NigPrior
from skewfit.harness import (ExperimentSpec, SimRow, cmd_fit, cmd_simulate, load_synthetic_grades,
                             make_synthetic_grades, parse_sample, write_fit)
from skewfit.posterior import NormalPrior, SkewNormalPrior

FAST_FIT = ["--iters", "400", "--burnin", "100", "--sweeps", "10"]


def _read(path):
    return path.read_bytes()


def test_experiment_spec_validation():
    tp = SkewNormalParams(0, 1, 0)
    with pytest.raises(ValueError):
        ExperimentSpec(tp, 10, 0, "posterior-mean", NormalPrior())
    with pytest.raises(ValueError):
        ExperimentSpec(tp, 10, 5, "posterior-median", NormalPrior())
    with pytest.raises(ValueError):
        ExperimentSpec(tp, 10, 5, "posterior-mode", NormalPrior(), fixed_loc_scale=False)


def test_tiny_simulation_schema():
    spec = ExperimentSpec(SkewNormalParams(0, 1, -5), 10, 50, "posterior-mean",
                          SkewNormalPrior(0.0, 3.0, -10.0), n_draws=200, ltn_sweeps=10)
    row = cmd_simulate(spec, "scenario2")
    d = row.as_dict()
    assert tuple(d) == SimRow.fields
    assert all(np.isfinite(d[k]) for k in ("bias", "mse", "mc_se_bias"))
    assert d["reps"] == 50 and d["alpha_true"] == -5.0
    assert d["mse"] >= d["bias"] ** 2


def test_simulation_independent_of_worker_count():
    spec = ExperimentSpec(SkewNormalParams(0, 1, 1), 15, 12, "posterior-mean",
                          NormalPrior(0.0, 1.0), n_draws=100, ltn_sweeps=5, seed=5)
    a = cmd_simulate(spec, workers=1).as_dict()
    b = cmd_simulate(spec, workers=4).as_dict()
    assert a == b


def test_symmetric_setting_is_unbiased():
    spec = ExperimentSpec(SkewNormalParams(0, 1, 0), 20, 400, "posterior-mode", NormalPrior(0.0, 1.0))
    row = cmd_simulate(spec)
    assert abs(row.bias) < 4 * row.mc_se_bias


def test_full_sampler_replication():
    spec = ExperimentSpec(SkewNormalParams(0, 1, 2), 30, 2, "posterior-mean", NormalPrior(2.0, 1.0),
                          fixed_loc_scale=False, gibbs=GibbsConfig(300, 100), ltn_sweeps=5)
    assert np.isfinite(cmd_simulate(spec).bias)


def test_edge_warnings_are_counted():
    spec = ExperimentSpec(SkewNormalParams(0, 1, 50), 3, 20, "posterior-mode", NormalPrior(0.0, 1e6))
    row = cmd_simulate(spec)
    assert row.edge_warnings > 0


def test_parse_sample():
    assert np.array_equal(parse_sample("x\n1\n2.5\n\n-3e1\n"), [1.0, 2.5, -30.0])
    assert np.array_equal(parse_sample("1\n2\n"), [1.0, 2.0])
    with pytest.raises(DataError, match=r"f.csv:3: not a number: 'foo'"):
        parse_sample("x\n1\nfoo\n", "f.csv")
    with pytest.raises(DataError, match="no numeric"):
        parse_sample("")
    with pytest.raises(DataError, match="non-finite"):
        parse_sample("1\nnan\n")
    with pytest.raises(DataError, match="one column"):
        parse_sample("1,2\n")


def test_shipped_grades():
    y = load_synthetic_grades()
    assert y.size == 79
    assert np.allclose(y, make_synthetic_grades(), atol=5e-7)


def test_fit_report_round_trip(tmp_path):
    y = load_synthetic_grades()
    report = cmd_fit(y, SkewNormalPrior(0.0, 7.0, 20.0), NigPrior(18.0, 0.01, 1.0, 5.0),
                     GibbsConfig(400, 100, ltn_sweeps=10), source="synthetic")
    write_fit(report, tmp_path)
    back = np.loadtxt(tmp_path / "bands.csv", delimiter=",", skiprows=1)
    assert np.array_equal(back, report.band_rows())
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) == {"config", "geweke", "summary"}
    assert summary["config"]["data"]["n"] == 79
    for name in ("xi", "omega", "alpha"):
        row = summary["summary"][name]
        assert np.isfinite([row["mean"], row["lo95"], row["hi95"]]).all()


def test_fit_refuses_tiny_sample():
    with pytest.raises(DataError):
        cmd_fit([1.0, 2.0], NormalPrior(), NigPrior(), GibbsConfig(20, 5))


# --- command line


def test_cli_fit_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["fit", *FAST_FIT, "--seed", "3", "--out", str(a)]) == 0
    assert main(["fit", *FAST_FIT, "--seed", "3", "--out", str(b)]) == 0
    for name in ("summary.json", "bands.csv"):
        assert _read(a / name) == _read(b / name)
    c = tmp_path / "c"
    main(["fit", *FAST_FIT, "--seed", "4", "--out", str(c)])
    assert _read(a / "summary.json") != _read(c / "summary.json")
    cfg = json.loads((a / "summary.json").read_text())["config"]
    assert cfg["gibbs"]["seed"] == 3 and cfg["shape_prior"]["lambda0"] == 20.0


def test_cli_simulate_deterministic(tmp_path):
    args = ["simulate", "--scenario", "scenario3", "--n", "10,20", "--reps", "20",
            "--draws", "100", "--sweeps", "5", "--seed", "1"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b"), "--workers", "1"])
    assert _read(tmp_path / "a" / "simstudy.csv") == _read(tmp_path / "b" / "simstudy.csv")
    with open(tmp_path / "a" / "simstudy.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 * 2 * 2
    assert {r["estimand"] for r in rows} == {"posterior-mean", "posterior-mode"}


def test_cli_elicit(tmp_path):
    assert main(["elicit", "--mean", "22.68", "--sd", "13.72", "--skew", "0.35",
                 "--lambda0", "7", "--psi0", "10", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "elicit.json").read_text())
    assert rep["shape_prior"]["alpha0"] == pytest.approx(1.67, rel=0.015)
    assert rep["nig"]["xi0"] == pytest.approx(9.81, rel=0.01)
    assert rep["shape_prior_check"]["prob_alpha_negative"] < 0.05
    curve = np.loadtxt(tmp_path / "fig1.csv", delimiter=",", skiprows=1)
    assert curve[0, 1] == pytest.approx(0.5)
    first = _read(tmp_path / "elicit.json")
    main(["elicit", "--mean", "22.68", "--sd", "13.72", "--skew", "0.35",
          "--lambda0", "7", "--psi0", "10", "--out", str(tmp_path)])
    assert _read(tmp_path / "elicit.json") == first


def test_cli_elicit_lambda_zero(tmp_path):
    main(["elicit", "--lambda0", "0", "--out", str(tmp_path)])
    rep = json.loads((tmp_path / "elicit.json").read_text())
    assert rep["shape_prior_check"]["prob_alpha_negative"] == pytest.approx(0.5)


@pytest.mark.parametrize("content, needle", [
    ("grade\n1\n2\nfoo\n", ":4: not a number"),
    ("", "no numeric"),
    ("1\n2\n", "at least 3"),
])
def test_cli_data_errors(tmp_path, capsys, content, needle):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    assert main(["fit", str(path), *FAST_FIT, "--out", str(tmp_path)]) == 3
    assert needle in capsys.readouterr().err


def test_cli_missing_file(tmp_path):
    assert main(["fit", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 3


@pytest.mark.parametrize("argv", [
    ["fit", "--psi0", "-1"],
    ["fit", "--iters", "10", "--burnin", "10"],
    ["elicit", "--mean", "1", "--sd", "1", "--skew", "0.999"],
    ["elicit", "--mean", "1"],
    ["simulate", "--reps", "0"],
])
def test_cli_usage_errors(tmp_path, argv):
    assert main([*argv, "--out", str(tmp_path)]) == 2


def test_cli_argparse_errors():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--n", "ten"])
    assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "skewfit.cli", "elicit", "--lambda0", "7",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "fig1.csv").exists()
