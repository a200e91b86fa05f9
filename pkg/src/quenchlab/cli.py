"""Config-driven experiment runner.

A single JSON config describes one job:

* ``distance``: D_S(t) over a time grid for a list of spin subsets, with the
  validity horizon t* tracked via the reference order parameter at R and
  R + delta_R.  Writes ``distance.csv``.
* ``correlators``: the f/g/h tables over ``|r| <= r_max`` for every time
  sample.  Writes ``correlators.csv``.
* ``tau_sweep``: decay-time extraction of the first subset's D_S(t) while one
  final-model parameter sweeps over a list of values.  Writes ``tau.csv``.
* ``oracle_compare``: pipeline vs exact diagonalization on a small periodic
  chain.  Writes ``oracle_report.json``.

Every run writes ``run_manifest.json``.  Data files are written atomically
(temp file + rename) and are byte-identical across reruns and worker counts;
the manifest carries the only wall-clock-dependent values.

Config field names match the schema documented in the README; ``--override
key=value`` flags rewrite dotted paths before validation.  The environment
variable ``QUENCHLAB_OUTDIR`` overrides ``output_dir``.

Exit codes: 0 success, 1 config validation failure, 2 runtime failure,
3 data past the validity horizon refused (rerun with --allow-unconverged).
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import sys
import tempfile
import time as _time
from dataclasses import dataclass

import click
import numpy as np

from . import __version__
from .analysis import DistanceSeries, default_window, fit_exponential
from .correlators import table_from_amplitudes
from .models import ClusterIsingModel, FiniteGrid, ThermodynamicGrid, XYModel
from .oracle import ExactDiagonalization, expectation
from .quench import QuenchProtocol, evolve_amplitudes
from .rdm import SpinSubset, enumerate_basis, max_distances
from .wick import broken_expectation, reference_operator, symmetric_expectation

__all__ = ["main", "load_config", "validate_config", "run_job"]

OUTDIR_ENV = "QUENCHLAB_OUTDIR"

_JOBS = ("distance", "correlators", "tau_sweep", "oracle_compare")


# ---------------------------------------------------------------------------
# config handling

def _parse_model(d: dict):
    family = d.get("family")
    if family == "xy":
        return XYModel(gamma=float(d["gamma"]), h=float(d["h"]))
    if family == "cluster":
        return ClusterIsingModel(cluster_size=int(d["cluster_size"]), phi=float(d["phi"]))
    raise ValueError(f"unknown model family {family!r}")


def _parse_grid(d: dict):
    mode = d.get("mode")
    if mode == "finite":
        return FiniteGrid(n_sites=int(d["n_sites"]))
    if mode == "thermodynamic":
        return ThermodynamicGrid(
            n_points=int(d.get("n_points", 4096)),
            rule=d.get("rule", "midpoint"),
        )
    raise ValueError(f"unknown grid mode {mode!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated job description."""

    job: str
    model_initial: XYModel | ClusterIsingModel
    model_final: XYModel | ClusterIsingModel
    grid: FiniteGrid | ThermodynamicGrid
    subsets: tuple[SpinSubset, ...]
    t_max: float
    dt: float
    R: int
    delta_R: int
    threshold: float
    output_dir: str
    workers: int
    allow_unconverged: bool
    r_max: int
    sweep: dict | None
    oracle: dict | None
    raw: dict

    def times(self) -> np.ndarray:
        n = int(round(self.t_max / self.dt))
        return np.round(np.arange(n + 1) * self.dt, 12)


def apply_override(raw: dict, item: str) -> None:
    """Rewrite one dotted config path in place; values parse as JSON."""
    if "=" not in item:
        raise ValueError(f"override {item!r} is not of the form key=value")
    key, _, text = item.partition("=")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = raw
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ValueError(f"override path {key!r} crosses a non-object field")
    node[parts[-1]] = value


def validate_config(raw: dict) -> tuple[list[str], list[str]]:
    """Return (violations, warnings); an empty violation list means run-ready."""
    errs: list[str] = []
    warns: list[str] = []

    def check(field, fn):
        try:
            return fn()
        except (KeyError, TypeError, ValueError) as exc:
            errs.append(f"{field}: {exc}")
            return None

    job = raw.get("job")
    if job not in _JOBS:
        errs.append(f"job: must be one of {_JOBS}, got {job!r}")
    mi = check("model_initial", lambda: _parse_model(raw.get("model_initial", {})))
    mf = check("model_final", lambda: _parse_model(raw.get("model_final", {})))
    check("grid", lambda: _parse_grid(raw.get("grid", {})))

    subsets = []
    for i, sites in enumerate(raw.get("subsets", [[0]])):
        s = check(f"subsets[{i}]", lambda sites=sites: SpinSubset(tuple(sites)))
        if s is not None:
            subsets.append(s)

    t = raw.get("time", {})
    dt = t.get("dt", 0.05)
    t_max = t.get("t_max", 10.0)
    if not (isinstance(dt, (int, float)) and dt > 0):
        errs.append(f"time.dt: must be > 0, got {dt!r}")
    if not (isinstance(t_max, (int, float)) and t_max > 0):
        errs.append(f"time.t_max: must be > 0, got {t_max!r}")

    R = raw.get("R", 100)
    delta_R = raw.get("delta_R", 10)
    threshold = raw.get("threshold", 1e-9)
    if not (isinstance(R, int) and R > 0):
        errs.append(f"R: must be a positive integer, got {R!r}")
    elif subsets and R <= max(s.span for s in subsets) + 1:
        errs.append(f"R: R={R} too small for subset span {max(s.span for s in subsets)}")
    if not (isinstance(delta_R, int) and delta_R > 0):
        errs.append(f"delta_R: must be a positive integer, got {delta_R!r}")
    if not (isinstance(threshold, (int, float)) and threshold > 0):
        errs.append(f"threshold: must be > 0, got {threshold!r}")
    if isinstance(R, int) and R % 2:
        warns.append(f"R={R} is odd; staggered order parameters need even R")

    for name, m in (("model_initial", mi), ("model_final", mf)):
        if isinstance(m, ClusterIsingModel) and subsets:
            lmax = max(s.l for s in subsets)
            if lmax >= m.cluster_size + 2:
                warns.append(
                    f"{name}: subset size {lmax} >= N+2 = {m.cluster_size + 2}; "
                    "the subset-degeneracy property no longer applies"
                )
    if mi is not None and not mi.ordered:
        errs.append(f"model_initial: {mi.label()} is outside its ordered phase")

    workers = raw.get("workers", 1)
    if not (isinstance(workers, int) and workers >= 1):
        errs.append(f"workers: must be a positive integer, got {workers!r}")
    r_max = raw.get("r_max", 20)
    if not (isinstance(r_max, int) and r_max >= 0):
        errs.append(f"r_max: must be a non-negative integer, got {r_max!r}")

    if job == "tau_sweep":
        sweep = raw.get("sweep")
        if not isinstance(sweep, dict):
            errs.append("sweep: tau_sweep jobs need a sweep object")
        else:
            if sweep.get("parameter") not in ("h", "gamma", "phi"):
                errs.append(f"sweep.parameter: unknown parameter {sweep.get('parameter')!r}")
            vals = sweep.get("values")
            if not (isinstance(vals, list) and vals and
                    all(isinstance(v, (int, float)) for v in vals)):
                errs.append("sweep.values: must be a non-empty list of numbers")
    if job == "oracle_compare":
        oracle = raw.get("oracle")
        if not isinstance(oracle, dict):
            errs.append("oracle: oracle_compare jobs need an oracle object")
        else:
            n = oracle.get("n_sites")
            if not (isinstance(n, int) and 2 <= n <= 14 and n % 2 == 0):
                errs.append(f"oracle.n_sites: must be an even integer in [2, 14], got {n!r}")
            if raw.get("grid", {}).get("mode") == "thermodynamic":
                errs.append("grid.mode: oracle_compare needs a finite grid")

    if not isinstance(raw.get("output_dir", "out"), str):
        errs.append("output_dir: must be a string")
    return errs, warns


def load_config(path: str, overrides=()) -> dict:
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("config root must be a JSON object")
    for item in overrides:
        apply_override(raw, item)
    return raw


def parse_config(raw: dict) -> ExperimentConfig:
    t = raw.get("time", {})
    output_dir = os.environ.get(OUTDIR_ENV) or raw.get("output_dir", "out")
    return ExperimentConfig(
        job=raw["job"],
        model_initial=_parse_model(raw["model_initial"]),
        model_final=_parse_model(raw["model_final"]),
        grid=_parse_grid(raw.get("grid", {"mode": "thermodynamic"})),
        subsets=tuple(SpinSubset(tuple(s)) for s in raw.get("subsets", [[0]])),
        t_max=float(t.get("t_max", 10.0)),
        dt=float(t.get("dt", 0.05)),
        R=int(raw.get("R", 100)),
        delta_R=int(raw.get("delta_R", 10)),
        threshold=float(raw.get("threshold", 1e-9)),
        output_dir=output_dir,
        workers=int(raw.get("workers", 1)),
        allow_unconverged=bool(raw.get("allow_unconverged", False)),
        r_max=int(raw.get("r_max", 20)),
        sweep=raw.get("sweep"),
        oracle=raw.get("oracle"),
        raw=raw,
    )


# ---------------------------------------------------------------------------
# output helpers

def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return "%.17g" % x


def _col(subset: SpinSubset) -> str:
    return "S" + "-".join(map(str, subset.sites))


def _pmap(fn, items, workers: int):
    """Order-preserving map, optionally over a process pool."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# ---------------------------------------------------------------------------
# job kernels (module level so they pickle for the process pool)

def _distance_point(args):
    """One time sample: (t, |b_R - b_{R+dR}| for the reference, D per subset)."""
    raw, t = args
    cfg = parse_config(raw)
    protocol = QuenchProtocol(cfg.model_initial, cfg.model_final, cfg.grid)
    ref = reference_operator(cfg.model_initial)
    span = max(s.span for s in cfg.subsets)
    r_need = cfg.R + cfg.delta_R + span + 1
    table = table_from_amplitudes(evolve_amplitudes(protocol, float(t)), r_need)
    diff = abs(broken_expectation(ref, table, cfg.R)
               - broken_expectation(ref, table, cfg.R + cfg.delta_R))
    dists = max_distances(cfg.subsets, table, cfg.R, ref)
    return float(t), float(diff), dists


def _distance_rows(cfg: ExperimentConfig):
    points = _pmap(_distance_point, [(cfg.raw, t) for t in cfg.times()], cfg.workers)
    t_star = math.inf
    for t, diff, _ in points:
        if diff > cfg.threshold:
            t_star = t
            break
    return points, t_star


def _correlator_point(args):
    raw, t = args
    cfg = parse_config(raw)
    protocol = QuenchProtocol(cfg.model_initial, cfg.model_final, cfg.grid)
    table = table_from_amplitudes(evolve_amplitudes(protocol, float(t)), cfg.r_max)
    return table.to_csv()


def _sweep_point(args):
    """One sweep value: returns (value, DecayFit | None, t_star, message)."""
    raw, value = args
    cfg = parse_config(raw)
    param = cfg.sweep["parameter"]
    final_raw = dict(raw["model_final"], **{param: value})
    # parallelism lives at the sweep level; each point runs serially
    sub_raw = dict(raw, model_final=final_raw, workers=1)
    try:
        points, t_star = _distance_rows(parse_config(sub_raw))
        t = np.array([p[0] for p in points])
        d = np.array([p[2][0] for p in points])
        keep = t < t_star
        series = DistanceSeries(f"{param}={value:g}", t[keep], d[keep], t_star=t_star)
        fit = fit_exponential(series, default_window(series, cfg.dt))
        return value, fit, t_star, ""
    except Exception as exc:  # per-point failures must not kill the sweep
        return value, None, math.inf, f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# jobs

def _job_distance(cfg: ExperimentConfig, manifest: dict) -> int:
    points, t_star = _distance_rows(cfg)
    manifest["t_star"] = t_star
    labels = [_col(s) for s in cfg.subsets]
    lines = []
    clipped = 0
    if cfg.allow_unconverged:
        lines.append("t," + ",".join(labels) + ",past_horizon\n")
    else:
        lines.append("t," + ",".join(labels) + "\n")
    for t, _, dists in points:
        past = t >= t_star
        if past and not cfg.allow_unconverged:
            clipped += 1
            continue
        row = ",".join([_fmt(t)] + [_fmt(d) for d in dists])
        if cfg.allow_unconverged:
            row += ",%d" % past
        lines.append(row + "\n")
    _atomic_write(os.path.join(cfg.output_dir, "distance.csv"), "".join(lines))
    manifest["rows_written"] = len(lines) - 1
    manifest["rows_clipped"] = clipped
    if clipped:
        manifest["status"] = "clipped"
        click.echo(
            f"{clipped} time samples at t >= t* = {t_star:g} refused; "
            "rerun with --allow-unconverged to emit them flagged",
            err=True,
        )
        return 3
    return 0


def _job_correlators(cfg: ExperimentConfig, manifest: dict) -> int:
    chunks = _pmap(_correlator_point, [(cfg.raw, t) for t in cfg.times()], cfg.workers)
    header, body = chunks[0].split("\n", 1)
    parts = [header + "\n", body]
    for c in chunks[1:]:
        parts.append(c.split("\n", 1)[1])
    _atomic_write(os.path.join(cfg.output_dir, "correlators.csv"), "".join(parts))
    manifest["rows_written"] = sum(c.count("\n") - 1 for c in chunks)
    return 0


def _job_tau_sweep(cfg: ExperimentConfig, manifest: dict) -> int:
    values = cfg.sweep["values"]
    results = _pmap(_sweep_point, [(cfg.raw, v) for v in values], cfg.workers)
    lines = ["param,tau,log_amplitude,t_lo,t_hi,rms_residual\n"]
    failures = {}
    for value, fit, t_star, msg in results:
        if fit is None:
            failures[f"{value:g}"] = msg
            continue
        lines.append(",".join(map(_fmt, (
            value, fit.tau, fit.log_amplitude, fit.window[0], fit.window[1],
            fit.rms_residual))) + "\n")
    _atomic_write(os.path.join(cfg.output_dir, "tau.csv"), "".join(lines))
    manifest["points_fit"] = len(lines) - 1
    manifest["points_failed"] = failures
    if not manifest["points_fit"]:
        raise RuntimeError(f"every sweep point failed: {failures}")
    return 0


def oracle_report(cfg: ExperimentConfig) -> dict:
    """Pipeline vs exact diagonalization on one finite periodic chain.

    Compares every parity-even Pauli string on the configured subsets, plus
    every parity-odd string paired with its own translate by R (the
    factorization input), at t = 0 and the configured times.
    """
    oracle = cfg.oracle or {}
    n_sites = int(oracle.get("n_sites", 10))
    times = [0.0] + [float(t) for t in oracle.get("times", [0.5, 1.0])]
    r_values = [int(r) for r in oracle.get("R_values", [2, 4])]
    tolerance = float(oracle.get("tolerance", 1e-8))

    ed_initial = ExactDiagonalization(cfg.model_initial, n_sites)
    ed_final = ExactDiagonalization(cfg.model_final, n_sites)
    even0, _, _ = ed_initial.parity_ground_states()
    protocol = QuenchProtocol(cfg.model_initial, cfg.model_final, FiniteGrid(n_sites))

    span = max(s.span for s in cfg.subsets)
    if span + max(r_values) >= n_sites:
        raise ValueError("subset span + R reaches around the periodic chain")

    worst = 0.0
    worst_case = ""
    n_checked = 0
    for t in times:
        state = ed_final.evolve(even0, t) if t else even0.astype(complex)
        table = table_from_amplitudes(
            evolve_amplitudes(protocol, t), span + max(r_values) + 1)
        for subset in cfg.subsets:
            for _, op, odd in enumerate_basis(subset):
                if op is None:
                    continue
                ops = ([op.tensor(op.translate(r)) for r in r_values if r > op.span]
                       if odd else [op])
                for w in ops:
                    dev = abs(symmetric_expectation(w, table)
                              - expectation(state, w, n_sites))
                    n_checked += 1
                    if dev > worst:
                        worst, worst_case = dev, f"{w.label()} at t={t:g}"
    return {
        "n_sites": n_sites,
        "times": times,
        "R_values": r_values,
        "n_expectations_checked": n_checked,
        "max_deviation": worst,
        "worst_case": worst_case,
        "tolerance": tolerance,
        "passed": bool(worst <= tolerance),
    }


def _job_oracle(cfg: ExperimentConfig, manifest: dict) -> int:
    report = oracle_report(cfg)
    _atomic_write(
        os.path.join(cfg.output_dir, "oracle_report.json"),
        json.dumps(report, indent=2) + "\n",
    )
    manifest["max_deviation"] = report["max_deviation"]
    click.echo(
        f"oracle comparison: {report['n_expectations_checked']} expectations, "
        f"max deviation {report['max_deviation']:.3e} "
        f"({'pass' if report['passed'] else 'FAIL'})"
    )
    if not report["passed"]:
        raise RuntimeError(
            f"oracle deviation {report['max_deviation']:.3e} exceeds "
            f"tolerance {report['tolerance']:g} ({report['worst_case']})"
        )
    return 0


_RUNNERS = {
    "distance": _job_distance,
    "correlators": _job_correlators,
    "tau_sweep": _job_tau_sweep,
    "oracle_compare": _job_oracle,
}


def run_job(raw: dict) -> int:
    """Validate, execute and write the manifest; returns the process exit code."""
    errs, warns = validate_config(raw)
    for w in warns:
        click.echo(f"warning: {w}", err=True)
    if errs:
        for e in errs:
            click.echo(f"invalid config: {e}", err=True)
        return 1
    cfg = parse_config(raw)
    os.makedirs(cfg.output_dir, exist_ok=True)
    grid = cfg.grid
    manifest = {
        "config": cfg.raw,
        "version": __version__,
        "grid_resolution": grid.n_sites if isinstance(grid, FiniteGrid) else grid.n_points,
        "status": "ok",
    }
    started = _time.monotonic()
    try:
        code = _RUNNERS[cfg.job](cfg, manifest)
    except Exception as exc:
        manifest["status"] = "failed"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        manifest["wall_clock_s"] = _time.monotonic() - started
        _atomic_write(
            os.path.join(cfg.output_dir, "run_manifest.json"),
            json.dumps(manifest, indent=2) + "\n",
        )
        click.echo(f"runtime failure: {exc}", err=True)
        return 2
    manifest["wall_clock_s"] = _time.monotonic() - started
    _atomic_write(
        os.path.join(cfg.output_dir, "run_manifest.json"),
        json.dumps(manifest, indent=2) + "\n",
    )
    return code


# ---------------------------------------------------------------------------
# click entry points

@click.group()
@click.version_option(__version__)
def main():
    """Quench distinguishability laboratory."""


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Rewrite a dotted config path, e.g. model_final.h=1.2.")
@click.option("--workers", type=int, default=None, help="Parallel worker count.")
@click.option("--allow-unconverged", is_flag=True,
              help="Emit flagged data past the validity horizon t*.")
def run(config_path, overrides, workers, allow_unconverged):
    """Execute the job described by CONFIG_PATH."""
    try:
        raw = load_config(config_path, overrides)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(1)
    if workers is not None:
        raw["workers"] = workers
    if allow_unconverged:
        raw["allow_unconverged"] = True
    sys.exit(run_job(raw))


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE")
def validate(config_path, overrides):
    """Check CONFIG_PATH without running anything."""
    try:
        raw = load_config(config_path, overrides)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(1)
    errs, warns = validate_config(raw)
    for w in warns:
        click.echo(f"warning: {w}")
    if errs:
        for e in errs:
            click.echo(f"invalid config: {e}", err=True)
        sys.exit(1)
    click.echo("config ok")
    sys.exit(0)


@main.command("compare-oracle")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE")
def compare_oracle(config_path, overrides):
    """Run the exact-diagonalization comparison for CONFIG_PATH."""
    try:
        raw = load_config(config_path, overrides)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(1)
    raw["job"] = "oracle_compare"
    sys.exit(run_job(raw))


if __name__ == "__main__":
    main()
