"""Command-line interface: simulate, fit, analyze product spaces, run analytic checks.

Every command writes into ``--out`` and leaves a ``manifest.json`` there
holding the resolved configuration, the tool version, the seed and SHA-256
digests of inputs and outputs.  ``adjpossible rerun MANIFEST --out DIR``
repeats the run and verifies that every output is byte-identical.

Configuration precedence: command-line flags override ``--config`` JSON
values, which override built-in defaults.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime or
convergence failure (including failed checks and non-reproducible reruns).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy import optimize

from adjpossible import __version__
from adjpossible.engine import Regime, SimParams, read_events_csv, read_snapshots_csv, run_population
from adjpossible.errors import ConvergenceError
from adjpossible.laws.fitness import bb_closed_form
from adjpossible.laws.heaps import fit_heaps, heaps_pairs, implicit_residual, solve_heaps_ode
from adjpossible.laws.kernel import estimate_attachment_kernel
from adjpossible.laws.master import stationary_distribution, stretched_exponential_r2, tail_slope
from adjpossible.laws.powerlaw import ccdf_regression, compare_lognormal, fit_power_law
from adjpossible import productspace as ps

MANIFEST = "manifest.json"


class UsageError(ValueError):
    """Invalid command line or configuration (exit code 1)."""


# --- serialization helpers ----------------------------------------------------

def _clean(obj):
    """Make ``obj`` JSON-safe: NaN/inf become null, tuples become lists, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: Path, obj) -> None:
    path.write_text(dump_json(obj), encoding="utf-8")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# --- configuration ------------------------------------------------------------

SIM_DEFAULTS = SimParams(nu=0.5, rho=1.0).to_dict()

DEFAULTS = {
    "simulate": SIM_DEFAULTS,
    "fit heaps": {"input": None},
    "fit kernel": {"input": None, "window": 50.0, "bins_per_decade": 4.0, "min_obs": 5, "dt": 1.0},
    "fit dist": {"input": None, "column": "k", "bootstrap": 1000, "x_min": None, "min_tail": 10,
                 "seed": 0},
    "productspace": {"input": None, "period_length": 10, "n_random": 100, "predict": False,
                     "horizon_periods": 1, "thresholded": True, "seed": 0},
    "oracle": {"nu": None, "rho": None, "kernel_lambda": None, "m": 0.1, "k_max": 100000,
               "eta": 0.1, "gamma": 0.3, "rho_lambda": 2.0, "seed": 0},
}
INPUT_KEYS = {"input"}


def resolve_config(command: str, file_cfg: dict, flags: dict) -> dict:
    cfg = dict(DEFAULTS[command])
    for source in (file_cfg, flags):
        for key, value in source.items():
            if key not in cfg:
                raise UsageError(f"unknown configuration key {key!r} for {command}")
            cfg[key] = value
    return cfg


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


# --- commands -----------------------------------------------------------------

def _require_input(cfg) -> Path:
    if not cfg.get("input"):
        raise UsageError("input: an input file is required")
    path = Path(cfg["input"])
    if not path.is_file():
        raise UsageError(f"input: file not found: {path}")
    return path


def run_simulate(cfg: dict, out: Path, jobs: int) -> None:
    params = SimParams.from_dict(cfg)
    traj = run_population(params)
    traj.write_events_csv(out / "events.csv")
    traj.write_snapshots_csv(out / "snapshots.csv")
    with open(out / "k_values.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["org_id", "k", "D"])
        for o in traj.orgs:
            w.writerow([o.org_id, o.k, o.D])
    ks = np.array([o.k for o in traj.orgs])
    write_json(out / "summary.json", {
        "n_orgs": len(traj.orgs),
        "n_events": len(traj.events),
        "n_new_types": sum(ev.is_new_type for ev in traj.events),
        "max_k": int(ks.max()),
        "mean_k": float(ks.mean()),
        "n_orgs_with_innovations": int((ks > 0).sum()),
    })


def run_fit_heaps(cfg: dict, out: Path, jobs: int) -> None:
    events = read_events_csv(_require_input(cfg))
    write_json(out / "heaps.json", fit_heaps(heaps_pairs(events)).to_dict())


def run_fit_kernel(cfg: dict, out: Path, jobs: int) -> None:
    snapshots = read_snapshots_csv(_require_input(cfg))
    fit = estimate_attachment_kernel(snapshots, window=cfg["window"], dt=cfg["dt"],
                                     bins_per_decade=cfg["bins_per_decade"], min_obs=cfg["min_obs"])
    write_json(out / "kernel.json", fit.to_dict())
    fit.write_bins_csv(out / "kernel_bins.csv")


def read_values(path: Path, column: str) -> np.ndarray:
    """Integer column ``column`` of a headed CSV; bad rows raise ``ValueError`` naming the line."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or column not in header:
            raise ValueError(f"line 1: header must contain column {column!r}")
        col = header.index(column)
        values = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"line {line_no}: expected {len(header)} fields, got {len(row)}")
            try:
                v = float(row[col])
            except ValueError:
                raise ValueError(f"line {line_no}: {column} value {row[col]!r} is not numeric") from None
            if not v.is_integer() or v < 0:
                raise ValueError(f"line {line_no}: {column} must be a non-negative integer")
            values.append(int(v))
    return np.asarray(values, dtype=np.int64)


def run_fit_dist(cfg: dict, out: Path, jobs: int) -> None:
    values = read_values(_require_input(cfg), cfg["column"])
    positive = values[values >= 1]
    fit = fit_power_law(positive, n_bootstrap=int(cfg["bootstrap"]), seed=int(cfg["seed"]),
                        x_min=cfg["x_min"], min_tail=int(cfg["min_tail"]), jobs=jobs)
    lr = compare_lognormal(positive, fit)
    slope, intercept, r2 = ccdf_regression(positive)
    write_json(out / "dist.json", {
        "n_samples": int(len(positive)),
        "n_excluded_zero": int(len(values) - len(positive)),
        "power_law": fit.to_dict(),
        "lognormal_comparison": lr.to_dict(),
        "ccdf_regression": {"slope": slope, "intercept": intercept, "r_squared": r2},
    })


def run_productspace(cfg: dict, out: Path, jobs: int) -> None:
    events = ps.read_product_events(_require_input(cfg))
    counts = ps.build_counts(events, int(cfg["period_length"]))
    if cfg["predict"] and counts.n_periods < 2:
        raise UsageError("predict: input spans a single period; prediction needs at least two")
    phis, stats = [], {}
    for p, start in enumerate(counts.period_starts):
        if not counts.delta[p].any():
            continue
        phi = ps.proximity(counts, start)
        phis.append(phi)
        stats[str(start)] = ps.network_stats(phi, n_random=int(cfg["n_random"]), seed=int(cfg["seed"]) + p)
    ps.export_network(phis, out / "edges.csv")
    write_json(out / "stats.json", {k: v.to_dict() for k, v in stats.items()})
    if cfg["predict"]:
        ev = ps.evaluate_prediction(counts, horizon_periods=int(cfg["horizon_periods"]),
                                    thresholded=bool(cfg["thresholded"]))
        write_json(out / "prediction.json", ev.to_dict())


def _check(name, value, expected, ok) -> dict:
    return {"name": name, "value": value, "expected": expected, "pass": bool(ok)}


def _ode_checks(nu: float, rho: float) -> list[dict]:
    checks = []
    if nu == rho:
        sol = solve_heaps_ode(nu, rho, 1e6)
        inv = [math.log(D) - k / D for k, D in sol.samples]
        spread = max(inv) - min(inv)
        checks.append(_check(f"ode_invariant nu={nu} rho={rho}", spread, "< 1e-6", spread < 1e-6))
        return checks
    sol = solve_heaps_ode(nu, rho, 1e6)
    worst = max(implicit_residual(k, D, nu, rho) for k, D in sol.samples)
    checks.append(_check(f"ode_implicit_relation nu={nu} rho={rho}", worst, "< 1e-6", worst < 1e-6))
    if nu > rho:
        k, D = sol.samples[-1]
        gap = abs(D / k - (nu - rho) / nu)
        checks.append(_check(f"ode_widening_share nu={nu} rho={rho}", D / k, (nu - rho) / nu, gap < 0.01))
    start = sol.samples[0][0]
    if start < 2:
        d2 = solve_heaps_ode(nu, rho, 2.0, k_eval=[2.0]).samples[-1][1]
        root = optimize.brentq(lambda D: D ** (rho / nu) - nu * D - (rho - nu) * 2.0, 1.0, 1e6, xtol=1e-14)
        checks.append(_check(f"ode_D_at_k2 nu={nu} rho={rho}", d2, root, abs(d2 - root) <= 1e-6 * root))
    return checks


def run_oracle(cfg: dict, out: Path, jobs: int) -> None:
    checks = []
    if (cfg["nu"] is None) != (cfg["rho"] is None):
        raise UsageError("nu/rho: give both or neither")
    pairs = [(cfg["nu"], cfg["rho"])] if cfg["nu"] is not None else [(1.0, 2.0), (0.5, 1.0), (0.3, 0.9), (2.0, 1.0)]
    for nu, rho in pairs:
        if not (nu > 0 and rho > 0):
            raise UsageError(f"nu/rho: must be > 0 (got nu={nu}, rho={rho})")
        checks += _ode_checks(float(nu), float(rho))

    eta, gamma, rl = cfg["eta"], cfg["gamma"], cfg["rho_lambda"]
    rate = eta / (1.0 - gamma)
    for t in (1.0, 5.0, 10.0):
        h = 1e-4
        fd = (bb_closed_form(eta, gamma, rl, t + h) - bb_closed_form(eta, gamma, rl, t - h)) / (2 * h)
        want = rate * bb_closed_form(eta, gamma, rl, t)
        rel = abs(fd - want) / want
        checks.append(_check(f"closed_form_growth_rate t={t:g}", rel, "< 1e-6", rel < 1e-6))

    lambdas = [cfg["kernel_lambda"]] if cfg["kernel_lambda"] is not None else [1.0, 0.5]
    k_max = int(cfg["k_max"])
    for lam in lambdas:
        p = stationary_distribution(float(lam), float(cfg["m"]), k_max)
        if lam == 1:
            slope = tail_slope(p, k_max // 100, k_max // 10)
            checks.append(_check("stationary_tail_slope lambda=1", slope, [-2.1, -1.9], -2.1 <= slope <= -1.9))
        else:
            r2 = stretched_exponential_r2(p, float(lam), 10, k_max // 10)
            checks.append(_check(f"stationary_stretched_exponential lambda={lam:g}", r2, "> 0.99", r2 > 0.99))

    report = {"checks": checks, "all_pass": all(c["pass"] for c in checks)}
    write_json(out / "report.json", report)
    if not report["all_pass"]:
        failed = ", ".join(c["name"] for c in checks if not c["pass"])
        raise ConvergenceError(f"oracle checks failed: {failed}")


RUNNERS = {
    "simulate": run_simulate,
    "fit heaps": run_fit_heaps,
    "fit kernel": run_fit_kernel,
    "fit dist": run_fit_dist,
    "productspace": run_productspace,
    "oracle": run_oracle,
}


# --- execution and manifests ------------------------------------------------

def execute(command: str, cfg: dict, out: Path, jobs: int = 1) -> dict:
    """Run ``command`` with resolved ``cfg`` into ``out`` and write its manifest."""
    out.mkdir(parents=True, exist_ok=True)
    inputs = {}
    for key in sorted(INPUT_KEYS & cfg.keys()):
        if cfg[key]:
            path = Path(cfg[key])
            if path.is_file():
                inputs[key] = {"path": str(path.resolve()), "sha256": sha256_file(path)}
    stale = out / MANIFEST
    if stale.exists():
        stale.unlink()
    RUNNERS[command](cfg, out, jobs)
    outputs = {p.name: sha256_file(p) for p in sorted(out.iterdir()) if p.is_file() and p.name != MANIFEST}
    manifest = {
        "tool": "adjpossible",
        "version": __version__,
        "command": command,
        "seed": cfg.get("seed"),
        "config": {k: (str(Path(v).resolve()) if k in INPUT_KEYS and v else v) for k, v in cfg.items()},
        "inputs": inputs,
        "outputs": outputs,
    }
    write_json(out / MANIFEST, manifest)
    return manifest


def rerun(manifest_path, out: Path, jobs: int = 1) -> dict:
    """Repeat a recorded run into ``out`` and check every output digest."""
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"manifest not found: {manifest_path}") from None
    command = manifest.get("command")
    if command not in RUNNERS:
        raise UsageError(f"manifest names unknown command {command!r}")
    for key, info in manifest.get("inputs", {}).items():
        if not Path(info["path"]).is_file():
            raise UsageError(f"{key}: recorded input {info['path']} is missing")
        if sha256_file(info["path"]) != info["sha256"]:
            raise UsageError(f"{key}: recorded input {info['path']} has changed")
    cfg = resolve_config(command, manifest["config"], {})
    fresh = execute(command, cfg, out, jobs)
    if fresh["outputs"] != manifest["outputs"]:
        diff = sorted(set(fresh["outputs"].items()) ^ set(manifest["outputs"].items()))
        raise ConvergenceError(f"rerun outputs differ from manifest: {sorted({name for name, _ in diff})}")
    return fresh


# --- argument parsing -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _budget(text: str):
    return None if text.lower() in ("none", "null") else float(text)


def _optional_int(text: str):
    return None if text.lower() in ("none", "null") else int(text)


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _common(p: argparse.ArgumentParser, seed: bool = True) -> None:
    p.add_argument("--config", help="JSON file of parameter values (flags take precedence)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    if seed:
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")


def _opt(p, flag, dest, type_, command, help_text):
    default = DEFAULTS[command][dest]
    p.add_argument(flag, dest=dest, type=type_, default=argparse.SUPPRESS,
                   help=f"{help_text} (default {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="adjpossible", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="simulate a population of innovating organizations")
    _common(sim)
    c = "simulate"
    _opt(sim, "--nu", "nu", float, c, "new-type probability per recombination, > 0")
    _opt(sim, "--rho", "rho", float, c, "improvement probability per recombination, > 0")
    _opt(sim, "--lambda", "lambda", int, c, "recombination length, >= 1")
    _opt(sim, "--regime", "regime", str, c, "strong or weak recombination")
    _opt(sim, "--horizon", "horizon", int, c, "number of steps")
    _opt(sim, "--entry-rate", "entry_rate", float, c, "expected entrants per step")
    _opt(sim, "--depth-mean", "depth_mean", float, c, "mean search depth in (0, 1]")
    _opt(sim, "--scope-mean", "scope_mean", float, c, "mean search scope in [0, 1)")
    _opt(sim, "--depth-jitter", "depth_jitter", float, c, "half-width of depth noise")
    _opt(sim, "--scope-jitter", "scope_jitter", float, c, "half-width of scope noise")
    _opt(sim, "--rate-cap", "rate_cap", float, c, "maximum expected innovations per org per step")
    _opt(sim, "--dt", "dt", float, c, "step length")
    _opt(sim, "--resource-budget", "resource_budget", _budget, c,
         "weak-regime population budget of expected innovations per step, or none")
    _opt(sim, "--fitness-spread", "fitness_spread", float, c, "half-width of per-org depth heterogeneity")
    _opt(sim, "--n-product-codes", "n_product_codes", _optional_int, c,
         "size of a shared product catalog, or none for org-local codes")
    _opt(sim, "--initial-orgs", "initial_orgs", int, c, "organizations present at time 0")

    fit = sub.add_parser("fit", help="fit statistical laws to simulation output")
    fsub = fit.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    fh = fsub.add_parser("heaps", help="Heaps exponent from an events CSV")
    _common(fh, seed=False)
    fh.add_argument("--input", default=argparse.SUPPRESS, help="events CSV")
    fk = fsub.add_parser("kernel", help="attachment kernel from a snapshots CSV")
    _common(fk, seed=False)
    fk.add_argument("--input", default=argparse.SUPPRESS, help="snapshots CSV")
    _opt(fk, "--window", "window", _budget, "fit kernel", "steps per rate-normalization window, or none")
    _opt(fk, "--bins-per-decade", "bins_per_decade", float, "fit kernel", "logarithmic bins per decade of k")
    _opt(fk, "--min-obs", "min_obs", int, "fit kernel", "minimum observations per bin")
    _opt(fk, "--dt", "dt", float, "fit kernel", "step length")
    fd = fsub.add_parser("dist", help="power-law fit and lognormal comparison of integer values")
    _common(fd)
    fd.add_argument("--input", default=argparse.SUPPRESS, help="CSV with a header")
    _opt(fd, "--column", "column", str, "fit dist", "column holding the values")
    _opt(fd, "--bootstrap", "bootstrap", int, "fit dist", "bootstrap replicates for the p-value")
    _opt(fd, "--xmin", "x_min", _optional_int, "fit dist", "fixed lower cutoff, or none to select")
    _opt(fd, "--min-tail", "min_tail", int, "fit dist", "smallest tail size considered")

    pspace = sub.add_parser("productspace", help="proximity network, statistics and prediction")
    _common(pspace)
    c = "productspace"
    pspace.add_argument("--input", default=argparse.SUPPRESS, help="CSV org_id,year,product_code")
    _opt(pspace, "--period-length", "period_length", int, c, "years per period")
    _opt(pspace, "--n-random", "n_random", int, c, "random graphs for the small-world baseline")
    _opt(pspace, "--predict", "predict", _bool, c, "also evaluate diversification prediction")
    _opt(pspace, "--horizon-periods", "horizon_periods", int, c, "periods ahead counted as a hit")
    _opt(pspace, "--thresholded", "thresholded", _bool, c, "use thresholded proximity for density")

    orc = sub.add_parser("oracle", help="check numerical routines against analytic results")
    _common(orc)
    c = "oracle"
    _opt(orc, "--nu", "nu", float, c, "nu for the ODE checks (default: a built-in set)")
    _opt(orc, "--rho", "rho", float, c, "rho for the ODE checks")
    _opt(orc, "--kernel-lambda", "kernel_lambda", float, c, "kernel exponent for the stationary check")
    _opt(orc, "--m", "m", float, c, "entry rate for the stationary distribution")
    _opt(orc, "--k-max", "k_max", int, c, "truncation of the stationary distribution")
    _opt(orc, "--eta", "eta", float, c, "fitness for the closed-form check")
    _opt(orc, "--gamma", "gamma", float, c, "gamma for the closed-form check")
    _opt(orc, "--rho-lambda", "rho_lambda", float, c, "rho*Lambda for the closed-form check")

    rr = sub.add_parser("rerun", help="repeat a run from its manifest and verify the outputs")
    rr.add_argument("manifest", help="path to manifest.json")
    rr.add_argument("--out", required=True, help="output directory")
    rr.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


_META = {"command", "kind", "config", "out", "jobs", "manifest"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.jobs < 1:
            raise UsageError(f"jobs: must be >= 1 (got {args.jobs})")
        out = Path(args.out)
        if args.command == "rerun":
            rerun(args.manifest, out, args.jobs)
            return 0
        command = args.command if args.command != "fit" else f"fit {args.kind}"
        flags = {k: v for k, v in vars(args).items() if k not in _META}
        file_cfg = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(command, file_cfg, flags)
        if command == "simulate":
            try:
                cfg["regime"] = Regime(cfg["regime"]).value
            except ValueError:
                raise UsageError(f"regime: must be 'strong' or 'weak' (got {cfg['regime']!r})") from None
            cfg = SimParams.from_dict(cfg).to_dict()
        execute(command, cfg, out, args.jobs)
        return 0
    except (ConvergenceError, FloatingPointError, RuntimeError) as exc:
        print(f"adjpossible: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"adjpossible: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
