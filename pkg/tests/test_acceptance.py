"""Acceptance criteria 1-9 at their stated tolerances and runtime budgets.

Each test records one line in the terminal summary and prints it as well.
Scenario-based criteria run the bundled configs end to end; where a closed
form exists, the endpoint samples are also checked against it.
"""
import csv
import json
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE
from oracles import ENTANGLED, TwoParticleSuperposition, free_width, packet
from scipy import stats as sps

from bohmlab.cli.config import RunConfig, parse_config
from bohmlab.cli.run import run_config
from bohmlab.cli.suite import bundled_scenarios, scenario_path
from bohmlab.dynamics import FullLaw, ReducedLaw, SymmetrizedLaw, VelocityField
from bohmlab.dynamics.integrate import BatchIntegrator, Controls, build_series, relabel_then_integrate_check
from bohmlab.dynamics.permutation import Permutation
from bohmlab.ensemble import calibration_check, sample_config
from bohmlab.varset import JumpProcess, RegionPartition, path_rngs, sector_masses
from bohmlab.wavefield import (GridSpec, IndexSet, ModelParams, Propagator, build_grid, density,
                               init_state)

pytestmark = pytest.mark.slow


def record(crit, ok, detail):
    ACCEPTANCE.append((crit, bool(ok), detail))
    print(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {crit}: {detail}"


@pytest.fixture(scope="module")
def psi():
    g = build_grid(GridSpec(2, 1, (-20.0, 20.0), 256))
    return init_state(ENTANGLED, g, ModelParams((1.0, 1.0)))


@pytest.fixture(scope="module")
def series(psi):
    return build_series(psi, 1.0, Controls())


def run_scenario(name, tmp_path):
    cfg = parse_config(scenario_path(name))
    t0 = time.perf_counter()
    res = run_config(cfg, tmp_path / name)
    return cfg, res, time.perf_counter() - t0


def endpoint_column(path, T, col):
    with open(path) as fh:
        rows = [r for r in csv.DictReader(fh) if float(r["t"]) == T and r["status"] == "0"]
    return np.array([float(r[col]) for r in rows])


def analytic_cdf_q1(T):
    """CDF of the first coordinate under |psi_T|^2, from closed-form packets."""
    ref = TwoParticleSuperposition(ENTANGLED, t=T)
    x = np.linspace(-20.0, 20.0, 40001)
    rho = ref.rho1(x)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))])
    return lambda q: np.interp(q, x, cdf / cdf[-1])


def analytic_ks(tmp_path, name, cfg, col):
    cdf = analytic_cdf_q1(cfg.experiment.T)
    ps = [sps.kstest(endpoint_column(tmp_path / name / f"samples_seed{s}.csv", cfg.experiment.T, col),
                     cdf).pvalue for s in cfg.seeds()]
    return ps


def summary(rep):
    c = rep["check"]
    return f"{c['n_passing']}/{c['n_seeds']} seeds, largest min p {c['max_min_p']:.2e}"


# 1 ---------------------------------------------------------------------------
def test_criterion_1_unitarity(psi):
    t0 = time.perf_counter()
    prop = Propagator(psi.grid, psi.params, 1e-3)
    a = np.array(psi.amplitudes)
    worst = 0.0
    for _ in range(2000):
        a = prop.step(a, 1)
        worst = max(worst, abs(np.sum(np.abs(a) ** 2) * psi.grid.cell_volume - 1.0))
    dt = time.perf_counter() - t0
    record("1", worst < 1e-10 and dt < 30, f"max |norm-1| {worst:.1e} over 2000 steps, {dt:.1f} s")


# 2 ---------------------------------------------------------------------------
def test_criterion_2_free_gaussian():
    t0 = time.perf_counter()
    q0 = np.array([[-2.0], [-0.5], [0.7], [1.9]])
    k, c0 = 0.8, -1.0

    def run(m, stride):
        g = build_grid(GridSpec(1, 1, (-20.0, 20.0), m))
        psi0 = init_state({"kind": "gaussian", "packets": [{"center": [c0], "width": 1.0,
                                                            "momentum": [k]}]}, g, ModelParams((1.0,)))
        ctl = Controls(stride=stride)
        ser = build_series(psi0, 1.0, ctl)
        x = g.mesh(0)
        rho = density(ser[-1])
        mean = np.sum(rho * x) * g.dx
        width = math.sqrt(np.sum(rho * (x - mean) ** 2) * g.dx)
        b = BatchIntegrator(FullLaw().track(ser), FullLaw(), ctl).run(q0 + c0, 0.0, 1.0)
        return width, b

    w, b = run(1024, 0.01)
    _, bf = run(4096, 0.0025)
    # scaling trajectory: x(t) = c + k t + (x0 - c) sigma(t) / sigma0
    sig = np.array([free_width(t) for t in b.times])
    exact = c0 + k * b.times[:, None] + sig[:, None] * q0[:, 0][None, :]
    werr = abs(w - free_width(1.0))
    perr = float(np.max(np.abs(b.x[:, :, 0] - exact)))
    cross = float(np.max(np.abs(b.x[-1] - bf.x[-1])))
    g = build_grid(GridSpec(1, 1, (-20.0, 20.0), 1024))
    psi0 = init_state({"kind": "gaussian", "packets": [{"center": [c0], "width": 1.0, "momentum": [k]}]},
                      g, ModelParams((1.0,)))
    serr = float(np.max(np.abs(build_series(psi0, 1.0, Controls(stride=0.01))[-1].amplitudes[:, 0]
                               - packet(g.x, c0, 1.0, k, 1.0))))
    dt = time.perf_counter() - t0
    ok = werr < 1e-4 and perr < 1e-3 and cross < 1e-3 and dt < 60
    record("2", ok, f"width err {werr:.1e}; path err {perr:.1e}; 4x-finer cross {cross:.1e}; "
                    f"psi vs closed form {serr:.1e}; {dt:.1f} s")


# 3 ---------------------------------------------------------------------------
def test_criterion_3_identity_collapses(psi, series):
    ctl = Controls()
    x0 = sample_config(density(psi), 100, np.random.default_rng(21), psi.grid)
    full = BatchIntegrator(FullLaw().track(series), FullLaw(), ctl).run(x0, 0.0, 1.0)
    red_law = ReducedLaw(IndexSet([1, 2], 2))
    red = BatchIntegrator(red_law.track(series), red_law, ctl).run(x0, 0.0, 1.0)
    d_red = float(np.max(np.abs(full.x - red.x)))

    g1 = build_grid(GridSpec(1, 1, (-20.0, 20.0), 256))
    one = init_state({"kind": "gaussian", "packets": [{"center": [0.5], "width": 0.8,
                                                       "momentum": [-1.2]}]}, g1, ModelParams((1.0,)))
    s1 = build_series(one, 1.0, ctl)
    y0 = np.linspace(-1.5, 2.5, 25)[:, None]
    a = BatchIntegrator(FullLaw().track(s1), FullLaw(), ctl).run(y0, 0.0, 1.0)
    b = BatchIntegrator(SymmetrizedLaw().track(s1), SymmetrizedLaw(), ctl).run(y0, 0.0, 1.0)
    d_sym = float(np.max(np.abs(a.x - b.x)))

    kk = 2 * math.pi / 40.0
    pw = init_state({"kind": "plane_wave", "wavenumbers": [[-4 * kk], [5 * kk]]}, psi.grid,
                    ModelParams((2.0, 0.5), hbar=1.0))
    v, _, _ = VelocityField(FullLaw(), pw).at(np.random.default_rng(2).uniform(-20, 20, (500, 2)))
    d_pw = float(np.max(np.abs(v - [-4 * kk / 2.0, 5 * kk / 0.5])))
    record("3", d_red < 1e-10 and d_sym < 1e-12 and d_pw < 1e-9,
           f"reduced(all) {d_red:.1e}; symmetrized N=1 {d_sym:.1e}; plane wave {d_pw:.1e}")


# 4 ---------------------------------------------------------------------------
def test_criterion_4_full_law_equivariance(tmp_path):
    t0 = time.perf_counter()
    cfg, res, _ = run_scenario("equivariance_full", tmp_path)
    ks = analytic_ks(tmp_path, "equivariance_full", cfg, "x0")
    _, ctl, _ = run_scenario("control_velocity", tmp_path)
    c = ctl.report["check"]
    detected = c["valid"] and c["max_min_p"] < 1e-3
    dt = time.perf_counter() - t0
    ok_ks = sum(p > 0.01 for p in ks) >= 4
    record("4", res.passed and detected and ok_ks and dt < 600,
           f"law {summary(res.report)}; analytic Q1 KS min p {min(ks):.3f}; "
           f"x2 control largest min p {c['max_min_p']:.1e}; {dt:.0f} s")


# 5 ---------------------------------------------------------------------------
def test_criterion_5_reduced_law(tmp_path):
    t0 = time.perf_counter()
    cfg, eq, _ = run_scenario("equivariance_reduced", tmp_path)
    _, ev, _ = run_scenario("equivalence_full_reduced", tmp_path)
    with open(tmp_path / "equivariance_reduced" / "samples_seed0.csv") as fh:
        header = next(csv.reader(fh))
    col = "x0"  # first stored coordinate is particle 1 in either layout
    ks = analytic_ks(tmp_path, "equivariance_reduced", cfg, col)
    dt = time.perf_counter() - t0
    ok_ks = sum(p > 0.01 for p in ks) >= 4
    record("5", eq.passed and ev.passed and ok_ks and dt < 600,
           f"vs reduced density {summary(eq.report)}; vs full marginal {summary(ev.report)}; "
           f"analytic KS min p {min(ks):.3f} ({len(header) - 3} stored coords); {dt:.0f} s")


# 6 ---------------------------------------------------------------------------
def test_criterion_6_symmetrized_law(psi, tmp_path):
    ctl = Controls()
    law = SymmetrizedLaw()
    tr = law.track(build_series(psi, 1.0, ctl))
    rng = np.random.default_rng(4)
    worst = 0.0
    for q in sample_config(density(psi), 5, rng, psi.grid):
        r = relabel_then_integrate_check(psi, q[:, None], Permutation.transposition(2, 0, 1), 1.0, ctl, track=tr)
        worst = max(worst, r.max_deviation)

    _, sym_run, _ = run_scenario("equivariance_symmetrized", tmp_path)

    sym = init_state({"kind": "symmetrize", "state": ENTANGLED}, psi.grid, psi.params)
    pts = sample_config(density(sym), 1000, np.random.default_rng(6), sym.grid)
    va, _, oka = VelocityField(FullLaw(), sym).at(pts)
    vb, _, okb = VelocityField(SymmetrizedLaw(), sym).at(pts)
    dv = float(np.max(np.abs(va - vb)))
    ok = worst < 1e-9 and sym_run.passed and dv < 1e-10 and oka.all() and okb.all()
    record("6", ok, f"(a) relabel {worst:.1e}; (b) {summary(sym_run.report)}; (c) {dv:.1e} at 1000 points")


# 7 ---------------------------------------------------------------------------
def test_criterion_7_markovization(psi, series, tmp_path):
    t0 = time.perf_counter()
    part = RegionPartition.half_line(0.0)
    mass_err = max(abs(sum(sector_masses(s, part).values()) - 1.0) for s in series.snapshots)

    _, mk, _ = run_scenario("markovization_half_line", tmp_path)

    ctl = Controls()
    whole = RegionPartition.whole(1)
    x0 = sample_config(density(psi), 300, np.random.default_rng(8), psi.grid)
    jp = JumpProcess(series, whole, ctl).run(np.full(300, 3), x0, 1.0, path_rngs(1, 300))
    full = BatchIntegrator(FullLaw().track(series), FullLaw(), ctl).run(x0, 0.0, 1.0)
    dev = float(np.nanmax(np.abs(jp.x - full.x)))
    dt = time.perf_counter() - t0
    ok = mass_err < 1e-8 and mk.passed and dev < 1e-8 and int(jp.n_jumps.sum()) == 0 and dt < 1200
    record("7", ok, f"(a) sector sum err {mass_err:.1e}; (b) {summary(mk.report)}; "
                    f"(c) whole box deviation {dev:.1e}; {dt:.0f} s")


# 8 ---------------------------------------------------------------------------
def test_criterion_8_calibration():
    t0 = time.perf_counter()
    rep = calibration_check(reps=100, n=10_000, alpha=0.01, seed=0)
    dt = time.perf_counter() - t0
    record("8", rep.passed and dt < 300, f"rejections {rep.rejections} (limit {rep.limit:g}); {dt:.0f} s")


# 9 ---------------------------------------------------------------------------
def sample_tables(root):
    return sorted(p.relative_to(root) for p in root.rglob("*.csv") if p.name.startswith(("samples", "traj", "events", "sector")))


def test_criterion_9_determinism(tmp_path):
    differing, compared = [], 0
    for name in bundled_scenarios():
        cfg = parse_config(scenario_path(name))
        data = cfg.model_dump()
        data["experiment"]["seeds"] = [cfg.seed]
        data["experiment"]["min_pass"] = 1
        one = RunConfig.model_validate(data)
        run_config(one, tmp_path / "w1" / name, workers=1)
        run_config(one, tmp_path / "w4" / name, workers=4)
        for rel in sample_tables(tmp_path / "w1" / name):
            compared += 1
            if (tmp_path / "w1" / name / rel).read_bytes() != (tmp_path / "w4" / name / rel).read_bytes():
                differing.append(f"{name}/{rel}")
        r1 = json.loads((tmp_path / "w1" / name / "report.json").read_text())
        r4 = json.loads((tmp_path / "w4" / name / "report.json").read_text())
        if r1 != r4:
            differing.append(f"{name}/report.json")
    record("9", compared > 0 and not differing,
           f"{compared} tables over {len(bundled_scenarios())} scenarios, workers 1 vs 4"
           + (f"; differ: {differing}" if differing else "; all bitwise identical"))
