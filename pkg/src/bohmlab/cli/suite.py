"""Verification rows run by ``bohmlab verify``."""
from __future__ import annotations

import filecmp
import math
import tempfile
import time
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..dynamics.integrate import BatchIntegrator, Controls, build_series, relabel_then_integrate_check
from ..dynamics.laws import FullLaw, ReducedLaw, SymmetrizedLaw, VelocityField
from ..dynamics.permutation import Permutation
from ..ensemble.checks import calibration_check
from ..ensemble.sampling import sample_config
from ..varset.fibers import sector_masses
from ..varset.jumps import JumpProcess, path_rngs
from ..varset.partition import RegionPartition
from ..wavefield import fields as wf
from ..wavefield.configs import IndexSet
from ..wavefield.evolve import Propagator
from ..wavefield.grid import GridSpec, ModelParams, build_grid
from ..wavefield.state import init_state
from .config import RunConfig, parse_config

CONTROL_P = 1e-3


@dataclass
class Row:
    name: str
    criterion: str
    passed: bool
    detail: str
    seconds: float


def scenario_path(name: str) -> Path:
    return Path(str(resources.files("bohmlab.cli") / "scenarios" / f"{name}.json"))


def bundled_scenarios() -> List[str]:
    root = Path(str(resources.files("bohmlab.cli") / "scenarios"))
    return sorted(p.stem for p in root.glob("*.json"))


def entangled_state(m: int = 256):
    cfg = parse_config(scenario_path("equivariance_full"))
    g = build_grid(GridSpec(2, 1, tuple(cfg.grid.box), m))
    p = ModelParams((1.0, 1.0))
    return init_state(cfg.state, g, p)


# -- deterministic rows ---------------------------------------------------------
def unitarity(vf=1.0):
    psi = entangled_state(256)
    prop = Propagator(psi.grid, psi.params, 1e-3)
    a = np.array(psi.amplitudes)
    worst = 0.0
    for _ in range(20):
        a = prop.step(a, 100)
        worst = max(worst, abs(float(np.sum(np.abs(a) ** 2)) * psi.grid.cell_volume - 1.0))
    return worst < 1e-10, f"max |norm-1| = {worst:.2e} over 2000 steps"


def gaussian_oracle(vf=1.0):
    def run(m):
        g = build_grid(GridSpec(1, 1, (-20.0, 20.0), m))
        p = ModelParams((1.0,))
        psi = init_state({"kind": "gaussian", "packets": [{"center": [0.0], "width": 1.0}]}, g, p)
        c = Controls(stride=0.01)
        ser = build_series(psi, 1.0, c)
        x = g.mesh(0)
        rho = wf.density(ser[-1])
        width = math.sqrt(float(np.sum(rho * x ** 2) * g.dx - (np.sum(rho * x) * g.dx) ** 2))
        law = FullLaw()
        q0 = np.array([[0.5], [1.0], [-1.5], [2.0]])
        b = BatchIntegrator(law.track(ser), law, c).run(q0, 0.0, 1.0)
        sig = np.sqrt(1.0 + b.times ** 2 / 4.0)
        err = float(np.max(np.abs(b.x[:, :, 0] - sig[:, None] * q0[:, 0][None, :])))
        return width, err, b.x
    w, e, x1 = run(1024)
    w4, e4, x4 = run(4096)
    target = math.sqrt(1.25)
    werr = abs(w - target)
    cross = float(np.max(np.abs(x1 - x4)))
    ok = werr < 1e-4 and e < 1e-3 and e4 < 1e-3 and cross < 1e-3
    return ok, f"width err {werr:.1e}; path err {e:.1e} (4x finer {e4:.1e}, cross {cross:.1e})"


def identity_collapses(vf=1.0):
    psi = entangled_state(256)
    c = Controls()
    ser = build_series(psi, 1.0, c)
    rng = np.random.default_rng(11)
    x0 = sample_config(wf.density(psi), 50, rng, psi.grid)
    full = BatchIntegrator(FullLaw().track(ser), FullLaw(), c).run(x0, 0.0, 1.0)
    red_law = ReducedLaw(IndexSet.all(2))
    red = BatchIntegrator(red_law.track(ser), red_law, c).run(x0, 0.0, 1.0)
    d_red = float(np.max(np.abs(full.x - red.x)))
    g1 = build_grid(GridSpec(1, 1, (-20.0, 20.0), 256))
    p1 = ModelParams((1.0,))
    one = init_state({"kind": "gaussian", "packets": [{"center": [-1.0], "width": 1.0,
                                                       "momentum": [1.5]}]}, g1, p1)
    s1 = build_series(one, 1.0, c)
    y0 = np.linspace(-3, 2, 20)[:, None]
    f1 = BatchIntegrator(FullLaw().track(s1), FullLaw(), c).run(y0, 0.0, 1.0)
    s_law = SymmetrizedLaw()
    y1 = BatchIntegrator(s_law.track(s1), s_law, c).run(y0, 0.0, 1.0)
    d_sym = float(np.max(np.abs(f1.x - y1.x)))
    k = 2 * math.pi / psi.grid.length
    pw = init_state({"kind": "plane_wave", "wavenumbers": [[3 * k], [-2 * k]]}, psi.grid,
                    ModelParams((1.0, 2.0)))
    v, _, _ = VelocityField(FullLaw(), pw).at(rng.uniform(-19, 19, size=(200, 2)))
    d_pw = float(np.max(np.abs(v - np.array([3 * k / 1.0, -2 * k / 2.0]))))
    ok = d_red < 1e-10 and d_sym < 1e-12 and d_pw < 1e-9
    return ok, f"reduced {d_red:.1e}; symmetrized N=1 {d_sym:.1e}; plane wave {d_pw:.1e}"


def relabel_invariance(vf=1.0):
    psi = entangled_state(256)
    law = SymmetrizedLaw()
    c = Controls()
    tr = law.track(build_series(psi, 1.0, c))
    worst = 0.0
    for q in ([[-2.0], [1.5]], [[0.3], [-0.7]], [[2.2], [-3.1]]):
        r = relabel_then_integrate_check(psi, q, Permutation.transposition(2, 0, 1), 1.0, c, track=tr)
        worst = max(worst, r.max_deviation)
    return worst < 1e-9, f"max deviation {worst:.1e}"


def symmetric_velocities(vf=1.0):
    psi = entangled_state(256)
    sym = init_state({"kind": "symmetrize", "state": parse_config(
        scenario_path("equivariance_full")).state}, psi.grid, psi.params)
    pts = sample_config(wf.density(sym), 1000, np.random.default_rng(5), sym.grid)
    va, da, oka = VelocityField(FullLaw(), sym).at(pts)
    vb, db, okb = VelocityField(SymmetrizedLaw(), sym).at(pts)
    keep = oka & okb
    dev = float(np.max(np.abs(va[keep] - vb[keep])))
    return dev < 1e-10 and bool(keep.all()), f"max |v_sym - v_full| = {dev:.1e} at {keep.sum()} points"


def sector_mass_sums(vf=1.0):
    psi = entangled_state(256)
    ser = build_series(psi, 1.0, Controls())
    part = RegionPartition.half_line(0.0)
    worst = max(abs(sum(sector_masses(s, part).values()) - 1.0) for s in ser.snapshots)
    return worst < 1e-8, f"max |sum - 1| = {worst:.1e} over {len(ser)} snapshots"


def whole_box_jump(vf=1.0):
    psi = entangled_state(256)
    c = Controls()
    ser = build_series(psi, 1.0, c)
    part = RegionPartition.whole(1)
    x0 = sample_config(wf.density(psi), 200, np.random.default_rng(3), psi.grid)
    jp = JumpProcess(ser, part, c).run(np.full(200, 3), x0, 1.0, path_rngs(0, 200))
    full = BatchIntegrator(FullLaw().track(ser), FullLaw(), c).run(x0, 0.0, 1.0)
    dev = float(np.nanmax(np.abs(jp.x - full.x)))
    ok = dev < 1e-8 and int(jp.n_jumps.sum()) == 0
    return ok, f"max deviation {dev:.1e}; jumps {int(jp.n_jumps.sum())}"


def calibration(vf=1.0):
    rep = calibration_check(reps=100, n=10_000, alpha=0.01, seed=0)
    return rep.passed, f"rejections {rep.rejections} (limit {rep.limit:g})"


# -- scenario rows ----------------------------------------------------------------
def _run_scenario(name: str, out: Path, vf: float, cfg: Optional[RunConfig] = None, workers=None):
    from .run import run_config
    cfg = cfg or parse_config(scenario_path(name))
    return run_config(cfg, out / name, workers=workers, velocity_factor=vf)


def scenario_row(name: str, detect: bool = False):
    def fn(vf=1.0, out: Path = Path(".")):
        res = _run_scenario(name, out, vf)
        chk = res.report["check"]
        summary = f"{chk['n_passing']}/{chk['n_seeds']} seeds pass; largest per-seed min p {chk['max_min_p']:.2e}"
        if detect:
            return chk["valid"] and chk["max_min_p"] < CONTROL_P, summary
        return res.passed, summary
    fn.wants_output = True
    return fn


def determinism(vf=1.0, out: Path = Path(".")):
    same = []
    for name in ("equivariance_full", "markovization_half_line"):
        cfg = parse_config(scenario_path(name))
        data = cfg.model_dump()
        data["experiment"]["seeds"] = [cfg.seed]
        cfg = RunConfig.model_validate(data)
        _run_scenario(name, out / "w1", vf, cfg, workers=1)
        _run_scenario(name, out / "w4", vf, cfg, workers=4)
        fa = out / "w1" / name / f"samples_seed{cfg.seed}.csv"
        fb = out / "w4" / name / f"samples_seed{cfg.seed}.csv"
        same.append(filecmp.cmp(fa, fb, shallow=False))
    return all(same), "bitwise-identical sample tables for workers 1 and 4" if all(same) else "tables differ"


determinism.wants_output = True

SUITE = [
    ("unitarity", "1", unitarity),
    ("gaussian_oracle", "2", gaussian_oracle),
    ("identity_collapses", "3", identity_collapses),
    ("equivariance_full", "4", scenario_row("equivariance_full")),
    ("control_velocity", "4", scenario_row("control_velocity", detect=True)),
    ("control_density", "4", scenario_row("control_density", detect=True)),
    ("equivariance_reduced", "5", scenario_row("equivariance_reduced")),
    ("equivalence_full_reduced", "5", scenario_row("equivalence_full_reduced")),
    ("relabel_invariance", "6a", relabel_invariance),
    ("equivariance_symmetrized", "6b", scenario_row("equivariance_symmetrized")),
    ("equivalence_full_symmetrized", "6b", scenario_row("equivalence_full_symmetrized")),
    ("symmetric_velocities", "6c", symmetric_velocities),
    ("sector_mass_sums", "7a", sector_mass_sums),
    ("markovization_half_line", "7b", scenario_row("markovization_half_line")),
    ("whole_box_jump", "7c", whole_box_jump),
    ("calibration", "8", calibration),
    ("determinism", "9", determinism),
]


def row_names() -> List[str]:
    return [n for n, _, _ in SUITE]


def run_suite(names: Optional[Sequence[str]] = None, velocity_factor: float = 1.0,
              output: Optional[Path] = None, echo: Callable[[str], None] = print) -> List[Row]:
    """Run the selected rows (all by default) in order and print a table."""
    chosen = [r for r in SUITE if names is None or r[0] in names]
    if names is not None:
        unknown = set(names) - set(row_names())
        if unknown:
            from ..errors import ValidationError
            raise ValidationError(f"unknown verify rows: {sorted(unknown)}")
    if not chosen:
        warnings.warn("verify: no scenarios selected; nothing to check", stacklevel=2)
        return []
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(output) if output is not None else Path(tmp)
        echo(f"{'row':30s} {'crit':5s} {'result':6s} {'sec':>7s}  detail")
        for name, crit, fn in chosen:
            t0 = time.perf_counter()
            try:
                if getattr(fn, "wants_output", False):
                    ok, detail = fn(velocity_factor, out)
                else:
                    ok, detail = fn(velocity_factor)
            except Exception as e:  # a crashing row is a failing row
                ok, detail = False, f"error: {type(e).__name__}: {e}"
            dt = time.perf_counter() - t0
            row = Row(name, crit, bool(ok), detail, dt)
            rows.append(row)
            echo(f"{name:30s} {crit:5s} {'PASS' if ok else 'FAIL':6s} {dt:7.1f}  {detail}")
    return rows
