import json
import subprocess
import sys

import numpy as np
import pytest

from adjpossible import __version__
from adjpossible.cli import main
from adjpossible.engine import write_snapshots_csv
from adjpossible.laws.powerlaw import sample_discrete_power_law
from adjpossible.productspace import write_product_events

from conftest import k5_events, worked_example_events, yule_snapshots



def run(*args):
    try:
        return main([str(a) for a in args])
    except SystemExit as exc:  # argparse usage errors
        return exc.code


def load(path):
    return json.loads(path.read_text(encoding="utf-8"))


def files_under(root):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


# --- simulate -------------------------------------------------------------------

def test_simulate_smoke_and_determinism(tmp_path):
    args = ["--nu", 0.5, "--rho", 1.0, "--lambda", 2, "--regime", "weak", "--horizon", 60, "--seed", 42]
    assert run("simulate", *args, "--out", tmp_path / "a") == 0
    assert run("simulate", *args, "--out", tmp_path / "b") == 0
    ma, mb = load(tmp_path / "a/manifest.json"), load(tmp_path / "b/manifest.json")
    assert ma["outputs"] == mb["outputs"]
    assert set(ma["outputs"]) == {"events.csv", "snapshots.csv", "k_values.csv", "summary.json"}
    assert ma["seed"] == 42 and ma["version"] == __version__ and ma["config"]["nu"] == 0.5
    assert (tmp_path / "a/manifest.json").read_bytes() == (tmp_path / "b/manifest.json").read_bytes()


def test_simulate_rejects_nonpositive_nu(tmp_path, capsys):
    assert run("simulate", "--nu", 0, "--out", tmp_path / "o") == 1
    assert "nu" in capsys.readouterr().err


@pytest.mark.parametrize("args", [["--regime", "medium"], ["--horizon", "abc"], ["--jobs", 0]])
def test_simulate_validation_exits_one(tmp_path, args):
    assert run("simulate", *args, "--out", tmp_path / "o") == 1


def test_config_file_precedence_and_unknown_keys(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"horizon": 20, "nu": 0.7}), encoding="utf-8")
    assert run("simulate", "--config", cfg, "--nu", 0.9, "--out", tmp_path / "o") == 0
    m = load(tmp_path / "o/manifest.json")["config"]
    assert m["horizon"] == 20 and m["nu"] == 0.9 and m["rho"] == 1.0
    cfg.write_text(json.dumps({"colour": "red"}), encoding="utf-8")
    assert run("simulate", "--config", cfg, "--out", tmp_path / "p") == 1
    cfg.write_text("{not json", encoding="utf-8")
    assert run("simulate", "--config", cfg, "--out", tmp_path / "q") == 1


def test_writes_only_inside_out_dir(tmp_path):
    work = tmp_path / "work"
    work.mkdir()
    before = files_under(tmp_path)
    assert run("simulate", "--horizon", 10, "--out", work / "o") == 0
    after = [p for p in files_under(tmp_path) if p not in before]
    assert after and all(str(p).startswith("work/o/") for p in after)


# --- fit ------------------------------------------------------------------------

def test_fit_dist_smoke(tmp_path):
    x = sample_discrete_power_law(2.2, 1, 800, np.random.default_rng(0))
    path = tmp_path / "k.csv"
    path.write_text("org_id,k\n" + "".join(f"{n},{v}\n" for n, v in enumerate(x)) + "900,0\n", encoding="utf-8")
    assert run("fit", "dist", "--input", path, "--bootstrap", 20, "--out", tmp_path / "o") == 0
    d = load(tmp_path / "o/dist.json")
    assert set(d["power_law"]) == {"alpha", "x_min", "ks_stat", "p_value", "n_tail"}
    assert {"r_statistic", "p_value"} <= set(d["lognormal_comparison"])
    assert d["n_excluded_zero"] == 1 and d["n_samples"] == 800
    assert 1.9 < d["power_law"]["alpha"] < 2.5


def test_fit_dist_malformed_row_names_line(tmp_path, capsys):
    path = tmp_path / "k.csv"
    path.write_text("org_id,k\n0,3\n1,4\n2,oops\n", encoding="utf-8")
    assert run("fit", "dist", "--input", path, "--out", tmp_path / "o") == 1
    assert "line 4" in capsys.readouterr().err


def test_fit_requires_existing_input(tmp_path):
    assert run("fit", "heaps", "--input", tmp_path / "missing.csv", "--out", tmp_path / "o") == 1
    assert run("fit", "heaps", "--out", tmp_path / "o") == 1


def test_fit_kernel_on_yule_fixture(tmp_path):
    path = tmp_path / "s.csv"
    write_snapshots_csv(path, yule_snapshots(300, 60, lambda k: 0.05 * k, seed=1))
    assert run("fit", "kernel", "--input", path, "--out", tmp_path / "o") == 0
    assert abs(load(tmp_path / "o/kernel.json")["exponent"] - 1.0) <= 0.1
    assert (tmp_path / "o/kernel_bins.csv").read_text().startswith("k_mid,mean_rate,n_orgs\n")


@pytest.mark.slow
def test_fit_heaps_end_to_end(tmp_path):
    assert run("simulate", "--nu", 0.5, "--rho", 1.0, "--horizon", 2000, "--entry-rate", 0,
               "--initial-orgs", 100, "--resource-budget", "none", "--rate-cap", 10, "--seed", 0,
               "--out", tmp_path / "sim") == 0
    assert run("fit", "heaps", "--input", tmp_path / "sim/events.csv", "--out", tmp_path / "fit") == 0
    assert abs(load(tmp_path / "fit/heaps.json")["exponent"] - 0.5) <= 0.05


# --- productspace ---------------------------------------------------------------

def test_productspace_worked_example(tmp_path):
    path = tmp_path / "e.csv"
    write_product_events(path, worked_example_events())
    assert run("productspace", "--input", path, "--n-random", 5, "--predict", "true", "--out", tmp_path / "o") == 0
    rows = (tmp_path / "o/edges.csv").read_text().splitlines()
    assert rows == ["source,target,weight,period", "electric_motors,automotive,0.4,2000"]
    stats = load(tmp_path / "o/stats.json")
    # the first decade has innovations but no prior history, so no edges
    assert set(stats) == {"1990", "2000"} and stats["1990"]["n_edges"] == 0
    assert stats["2000"]["n_edges"] == 1
    assert "bins" in load(tmp_path / "o/prediction.json")


def test_productspace_complete_graph_stats(tmp_path):
    path = tmp_path / "e.csv"
    write_product_events(path, k5_events())
    assert run("productspace", "--input", path, "--n-random", 5, "--out", tmp_path / "o") == 0
    s = load(tmp_path / "o/stats.json")["2000"]
    assert s["transitivity_pct"] == 100 and s["density_pct"] == 100 and s["avg_path_length"] == 1.0


def test_productspace_single_period_prediction_is_an_error(tmp_path, capsys):
    path = tmp_path / "e.csv"
    path.write_text("org_id,year,product_code\na,1990,x\nb,1991,y\n", encoding="utf-8")
    assert run("productspace", "--input", path, "--predict", "true", "--out", tmp_path / "o") == 1
    assert "predict" in capsys.readouterr().err


def test_productspace_rejects_non_numeric_year(tmp_path, capsys):
    path = tmp_path / "e.csv"
    path.write_text("org_id,year,product_code\na,1990,x\nb,199O,y\n", encoding="utf-8")
    assert run("productspace", "--input", path, "--out", tmp_path / "o") == 1
    assert "line 3" in capsys.readouterr().err


# --- oracle ---------------------------------------------------------------------

def test_oracle_default_run_passes(tmp_path):
    assert run("oracle", "--out", tmp_path) == 0
    report = load(tmp_path / "report.json")
    assert report["all_pass"] and all(c["pass"] for c in report["checks"])
    names = " ".join(c["name"] for c in report["checks"])
    assert "closed_form" in names and "stationary_tail_slope" in names


def test_oracle_quadratic_case(tmp_path):
    assert run("oracle", "--nu", 1, "--rho", 2, "--out", tmp_path) == 0
    checks = {c["name"]: c for c in load(tmp_path / "report.json")["checks"]}
    assert abs(checks["ode_D_at_k2 nu=1.0 rho=2.0"]["value"] - 2.0) < 1e-6


def test_oracle_linear_kernel_slope(tmp_path):
    assert run("oracle", "--kernel-lambda", 1, "--out", tmp_path) == 0
    slope = [c for c in load(tmp_path / "report.json")["checks"] if "tail_slope" in c["name"]][0]["value"]
    assert -2.1 <= slope <= -1.9


def test_oracle_failure_exits_two(tmp_path):
    # a truncation this short cannot reach the asymptotic tail
    assert run("oracle", "--kernel-lambda", 1, "--k-max", 100, "--m", 3, "--out", tmp_path) == 2
    assert not load(tmp_path / "report.json")["all_pass"]


# --- rerun ----------------------------------------------------------------------

def test_rerun_reproduces_bundles(tmp_path):
    path = tmp_path / "e.csv"
    write_product_events(path, worked_example_events())
    assert run("simulate", "--horizon", 30, "--seed", 7, "--out", tmp_path / "sim") == 0
    assert run("productspace", "--input", path, "--n-random", 5, "--out", tmp_path / "ps") == 0
    for name in ("sim", "ps"):
        assert run("rerun", tmp_path / name / "manifest.json", "--out", tmp_path / f"{name}2") == 0
        for f in (tmp_path / name).iterdir():
            assert f.read_bytes() == (tmp_path / f"{name}2" / f.name).read_bytes()


def test_rerun_detects_changed_input_and_tampered_output(tmp_path):
    path = tmp_path / "e.csv"
    write_product_events(path, worked_example_events())
    assert run("productspace", "--input", path, "--n-random", 5, "--out", tmp_path / "ps") == 0
    manifest = tmp_path / "ps/manifest.json"
    m = load(manifest)
    m["outputs"]["edges.csv"] = "0" * 64
    manifest.write_text(json.dumps(m), encoding="utf-8")
    assert run("rerun", manifest, "--out", tmp_path / "again") == 2
    path.write_text(path.read_text() + "C,2001,steel\n", encoding="utf-8")
    assert run("rerun", manifest, "--out", tmp_path / "again2") == 1


def test_console_script_version():
    out = subprocess.run([sys.executable, "-m", "adjpossible.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
