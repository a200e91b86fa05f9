"""Acceptance suite.

Each test is one acceptance criterion; `pytest -v` prints one pass/fail line
per criterion. The criteria cover closed-form order parameters, equivalence
with the exact-diagonalization oracle, static and dynamic structure of the
fermionic correlators, the exponential decay of the maximal distinguishability
D_S(t) with a subset-independent decay time, the cluster subset degeneracy,
maximality of D_S over ground-state superpositions, the finite-R validity
horizon, decay-time trends, and byte-level determinism of the CLI outputs.
"""

import math

import numpy as np
import pytest

from quenchlab.analysis import DistanceSeries, default_window, fit_exponential
from quenchlab.cli import (
    _distance_rows,
    oracle_report,
    parse_config,
    run_job,
)
from quenchlab.correlators import build_table, table_from_amplitudes
from quenchlab.models import (
    ClusterIsingModel,
    ThermodynamicGrid,
    XYModel,
    analytic_order_parameter,
)
from quenchlab.quench import QuenchProtocol, static_amplitudes
from quenchlab.rdm import SpinSubset, build_chi_tilde, build_rho, build_rho_sym, trace_distance
from quenchlab.wick import broken_expectation, reference_operator, validity_horizon


GRID = ThermodynamicGrid(4096)


def _distance_config(mi, mf, subsets, t_max, dt, n_points=4096, R=100):
    def model(m):
        if isinstance(m, XYModel):
            return {"family": "xy", "gamma": m.gamma, "h": m.h}
        return {"family": "cluster", "cluster_size": m.cluster_size, "phi": m.phi}

    return {
        "job": "distance",
        "model_initial": model(mi),
        "model_final": model(mf),
        "grid": {"mode": "thermodynamic", "n_points": n_points},
        "subsets": [list(s) for s in subsets],
        "time": {"t_max": t_max, "dt": dt},
        "R": R,
        "delta_R": 10,
        "threshold": 1e-9,
        "workers": 1,
    }


def _series_per_subset(cfg):
    points, t_star = _distance_rows(parse_config(cfg))
    t = np.array([p[0] for p in points])
    d = np.array([p[2] for p in points])
    return t, d, t_star


def test_criterion_01_closed_form_order_parameter():
    xy = XYModel(0.5, 0.2)
    table = build_table(QuenchProtocol(xy, xy, GRID), 0.0, 101)
    value = broken_expectation(reference_operator(xy), table, 100)
    assert value == pytest.approx(analytic_order_parameter(xy), abs=1e-3)
    assert value == pytest.approx(0.9657, abs=1e-3)

    cl = ClusterIsingModel(1, 3 * np.pi / 8)
    table = build_table(QuenchProtocol(cl, cl, GRID), 0.0, 101)
    value = broken_expectation(reference_operator(cl), table, 100)
    assert value == pytest.approx(analytic_order_parameter(cl), abs=1e-3)


@pytest.mark.parametrize("h0,h1", [(0.2, 0.8), (0.4, 1.2)])
def test_criterion_02_oracle_equivalence(h0, h1):
    subsets = [[0], [0, 1], [0, 2], [0, 3], [0, 1, 2], [0, 1, 3], [0, 2, 3]]
    for n_sites in (8, 10, 12):
        raw = {
            "job": "oracle_compare",
            "model_initial": {"family": "xy", "gamma": 0.5, "h": h0},
            "model_final": {"family": "xy", "gamma": 0.5, "h": h1},
            "grid": {"mode": "finite", "n_sites": n_sites},
            "subsets": subsets,
            "oracle": {
                "n_sites": n_sites,
                "times": [0.25, 0.5, 1.0, 2.0],
                "R_values": [1, 2, 3, 4],
                "tolerance": 1e-8,
            },
        }
        report = oracle_report(parse_config(raw))
        assert report["passed"], (n_sites, report["max_deviation"], report["worst_case"])


def test_criterion_03_static_identities():
    rng = np.random.default_rng(2024)
    models = [XYModel(rng.uniform(0.05, 1.0), rng.uniform(0.0, 1.8)) for _ in range(10)]
    models += [
        ClusterIsingModel(int(rng.integers(1, 4)), rng.uniform(0.0, np.pi / 2))
        for _ in range(10)
    ]
    rs = np.arange(-100, 101)
    delta = (rs == 0).astype(float)
    for m in models:
        table = table_from_amplitudes(static_amplitudes(m, GRID), 100)
        assert np.max(np.abs(table.f - delta)) < 1e-12, m
        assert np.max(np.abs(table.h + delta)) < 1e-12, m

    for nn in (1, 2, 3):
        m = ClusterIsingModel(nn, 3 * np.pi / 8)
        table = table_from_amplitudes(static_amplitudes(m, GRID), 100)
        allowed = (rs - 1) % (nn + 2) == 0
        assert np.max(np.abs(table.g[~allowed])) < 1e-9, nn


def test_criterion_04_dynamic_selection_rules():
    proto = QuenchProtocol(
        ClusterIsingModel(1, 5 * np.pi / 16),
        ClusterIsingModel(1, 7 * np.pi / 16),
        GRID,
    )
    rs = np.arange(-30, 31)
    g_allowed = (rs - 1) % 3 == 0
    f_allowed = (rs % 3 == 0) & (rs != 0)
    for t in np.linspace(0.0, 5.0, 50):
        table = build_table(proto, float(t), 30)
        assert np.max(np.abs(table.g[~g_allowed])) < 1e-8, t
        nontrivial = table.f - (rs == 0).astype(float)
        assert np.max(np.abs(nontrivial[~f_allowed])) < 1e-8, t


@pytest.mark.parametrize("h0,h1", [(0.2, 0.8), (0.4, 1.2)])
def test_criterion_05_exponential_decay_common_tau(h0, h1):
    subsets = [(0,), (0, 1), (0, 2), (0, 1, 2)]
    cfg = _distance_config(XYModel(0.5, h0), XYModel(0.5, h1), subsets, 20.0, 0.05)
    t, d, t_star = _series_per_subset(cfg)
    taus = []
    for j, s in enumerate(subsets):
        keep = t < t_star
        series = DistanceSeries(str(s), t[keep], d[keep, j], t_star=t_star)
        fit = fit_exponential(series, default_window(series, 0.05))
        # residuals measured in decades, the display scale of log-linear fits
        assert fit.rms_residual / math.log(10) < 0.05, (s, fit)
        taus.append(fit.tau)
    spread = (max(taus) - min(taus)) / np.mean(taus)
    assert spread < 0.05, taus


@pytest.mark.parametrize(
    "phi0,phi1",
    [(5 * np.pi / 16, 7 * np.pi / 16), (3 * np.pi / 8, np.pi / 8)],
)
def test_criterion_06_cluster_subset_degeneracy(phi0, phi1):
    subsets = [(0,), (0, 1), (0, 2)]
    cfg = _distance_config(
        ClusterIsingModel(1, phi0), ClusterIsingModel(1, phi1), subsets, 4.0, 0.2
    )
    t, d, t_star = _series_per_subset(cfg)
    keep = t < t_star
    spread = np.max(d[keep], axis=1) - np.min(d[keep], axis=1)
    assert np.max(spread) < 1e-8, np.max(spread)


def test_criterion_07_maximality_of_distance():
    proto = QuenchProtocol(XYModel(0.5, 0.2), XYModel(0.5, 0.8), GRID)
    ref = reference_operator(proto.model_initial)
    subset = SpinSubset((0, 1))
    rng = np.random.default_rng(77)
    for t in (0.0, 0.5, 1.0, 2.0):
        table = build_table(proto, t, 112)
        rho_sym = build_rho_sym(subset, table)
        chi = build_chi_tilde(subset, table, 100, ref)
        d_max = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(chi)))
        for _ in range(100):
            z = rng.normal(size=4).view(complex)
            u, v = z / np.linalg.norm(z)
            rho = build_rho(u, v, subset, table, 100, ref)
            assert trace_distance(rho, rho_sym) <= d_max + 1e-10


def test_criterion_08_convergence_horizon_increases_with_R():
    proto = QuenchProtocol(XYModel(0.8, 0.2), XYModel(0.8, 0.8), GRID)
    ref = reference_operator(proto.model_initial)
    times = np.arange(0.25, 45.0, 0.25)
    t_stars = [validity_horizon(ref, proto, times, R) for R in (20, 40, 60, 80, 100)]
    assert all(math.isfinite(ts) for ts in t_stars), t_stars
    assert all(b > a for a, b in zip(t_stars, t_stars[1:])), t_stars


@pytest.mark.parametrize(
    "gamma,h0,left,right",
    [
        (0.8, 0.2, [0.05, 0.1, 0.15], [0.4, 0.6, 0.8]),
        (0.5, 0.5, [0.2, 0.3, 0.4], [0.6, 0.7, 0.8]),
        (0.2, 0.8, [0.5, 0.6, 0.7], [0.85, 0.9, 0.95]),
    ],
)
def test_criterion_09_tau_trend(gamma, h0, left, right):
    def tau_of(h1):
        cfg = _distance_config(
            XYModel(gamma, h0), XYModel(gamma, h1), [(0,)], 20.0, 0.1, n_points=2048
        )
        t, d, t_star = _series_per_subset(cfg)
        keep = t < t_star
        series = DistanceSeries(f"h1={h1:g}", t[keep], d[keep, 0], t_star=t_star)
        return fit_exponential(series, default_window(series, 0.1)).tau

    # tau grows as h1 approaches h0 from either side
    left_taus = [tau_of(h) for h in left]
    assert all(b > a for a, b in zip(left_taus, left_taus[1:])), (left, left_taus)
    right_taus = [tau_of(h) for h in right]
    assert all(a > b for a, b in zip(right_taus, right_taus[1:])), (right, right_taus)


def test_criterion_10_determinism(tmp_path):
    base = _distance_config(
        XYModel(0.5, 0.2), XYModel(0.5, 0.8), [(0,), (0, 1)], 0.5, 0.25,
        n_points=256, R=40,
    )
    outputs = {}
    for name, workers in (("a", 1), ("b", 2), ("c", 1)):
        cfg = dict(base, workers=workers, output_dir=str(tmp_path / name))
        assert run_job(cfg) == 0
        outputs[name] = open(tmp_path / name / "distance.csv").read()
    assert outputs["a"] == outputs["b"] == outputs["c"]

    for name, workers in (("ca", 1), ("cb", 2)):
        cfg = dict(base, job="correlators", r_max=5, workers=workers,
                   output_dir=str(tmp_path / name))
        assert run_job(cfg) == 0
    a = open(tmp_path / "ca" / "correlators.csv").read()
    b = open(tmp_path / "cb" / "correlators.csv").read()
    assert a == b
