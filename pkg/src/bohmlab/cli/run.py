"""Execute one configured experiment and write its artifacts."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..dynamics.integrate import OK, STATUS_NAMES, BatchIntegrator, Trajectory, write_trajectory_csv
from ..ensemble import checks
from ..ensemble.runner import JumpLaw, config_hash, stream, versions
from ..ensemble.sampling import sample_config
from ..varset.fibers import sector_masses
from ..varset.jumps import path_rngs, write_event_log
from ..wavefield import fields as wf
from ..wavefield.configs import IndexSet, LabeledConfig
from .build import Built, build
from .config import RunConfig

PASS, FAIL = 0, 1


@dataclass
class Outcome:
    passed: bool
    report: dict
    reason: Optional[str] = None

    @property
    def exit_code(self) -> int:
        return PASS if self.passed else FAIL


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n")


def _verdict(rep) -> Optional[str]:
    if not rep.valid:
        worst = max(o.aborted_fraction for o in rep.outcomes)
        return f"aborted fraction {worst:.4f} exceeds 0.01; result invalid"
    if not rep.passed:
        return f"{rep.n_passing} of {len(rep.outcomes)} seeds passed; {rep.min_pass} required"
    return None


def _flat_tests(rep) -> list:
    return [dict(t.to_dict(rep.alpha), seed=o.seed) for o in rep.outcomes for t in o.tests]


def _check_report(kind: str, rep, extra: Optional[dict] = None) -> Outcome:
    reason = _verdict(rep)
    body = {"kind": kind, "pass": rep.passed, "reason": reason, "check": rep.to_dict(),
            "tests": _flat_tests(rep)}
    body.update(extra or {})
    return Outcome(rep.passed, body, reason)


def _equivariance(b: Built, out: Path, figures: bool, workers) -> Outcome:
    ex = b.config.experiment
    law = b.law(ex.law)
    exp = b.experiment()
    rep = checks.equivariance_check(
        law, b.psi0, ex.T, ex.n, seeds=b.config.seeds(), alpha=ex.alpha,
        min_pass=b.config.min_pass(), n_bins=ex.n_bins, experiment=exp,
        initial_state=b.initial_state(), workers=workers, keep_results=True)
    for res, o in zip(rep.results, rep.outcomes):
        res.write_csv(out / f"samples_seed{o.seed}.csv")
    if figures and rep.results and not isinstance(law, JumpLaw):
        from . import figures as fg
        ref = checks.Reference(law, exp.psi_at(ex.T))
        x = rep.results[0].at(ex.T)
        fresh = ref.fresh(x.shape[0], stream(rep.outcomes[0].seed, 1, 0))
        if law.unordered:
            from ..ensemble.sampling import sort_points
            x, fresh = sort_points(x, b.grid.space_dim), sort_points(fresh, b.grid.space_dim)
        fg.sample_histograms(out, "endpoint_histograms", x, fresh, ["ensemble", "reference"],
                             f"{law!r} at t={ex.T:g}")
    return _check_report("equivariance", rep, {"law": repr(law)})


def _equivalence(b: Built, out: Path, figures: bool, workers) -> Outcome:
    ex = b.config.experiment
    la, lb = b.law(ex.law), b.law(ex.law_b)
    obs = IndexSet(ex.observable, b.grid.num_particles)
    exp = b.experiment()
    rep = checks.equivalence_check(
        la, lb, obs, b.psi0, ex.T, ex.n, seeds=b.config.seeds(), alpha=ex.alpha,
        min_pass=b.config.min_pass(), n_bins=ex.n_bins, sorted_stats=ex.sorted,
        experiment=exp, workers=workers, keep_results=True)
    d = b.grid.space_dim
    for k, o in enumerate(rep.outcomes):
        rep.results[2 * k].write_csv(out / f"samples_a_seed{o.seed}.csv")
        rep.results[2 * k + 1].write_csv(out / f"samples_b_seed{o.seed}.csv")
    if figures and rep.results:
        from . import figures as fg
        a = checks.observable_coords(la, rep.results[0].at(ex.T), obs, d, ex.sorted)
        c = checks.observable_coords(lb, rep.results[1].at(ex.T), obs, d, ex.sorted)
        fg.sample_histograms(out, "observable_histograms", a, c, [repr(la), repr(lb)],
                             f"observed particles {obs} at t={ex.T:g}")
    return _check_report("equivalence", rep, {"law_a": repr(la), "law_b": repr(lb),
                                              "observable": str(obs), "sorted": ex.sorted})


def _markovization(b: Built, out: Path, figures: bool, workers) -> Outcome:
    ex = b.config.experiment
    exp = b.experiment()
    rep = checks.markovization_check(
        b.partition, b.psi0, ex.T, ex.n, seeds=b.config.seeds(), alpha=ex.alpha,
        min_pass=b.config.min_pass(), n_bins=ex.n_bins, experiment=exp, workers=workers,
        keep_results=True)
    for res, o in zip(rep.results, rep.outcomes):
        res.write_csv(out / f"samples_seed{o.seed}.csv")
    sums = [float(sum(sector_masses(s, b.partition).values())) for s in exp.series.snapshots]
    extra = {"sector_mass_sum_max_error": max(abs(s - 1.0) for s in sums)}
    if rep.results:
        res = rep.results[0]
        masks, _ = res.at(ex.T)
        n = b.grid.num_particles
        observed = {str(IndexSet.from_mask(m, n)): float(np.mean(masks == m)) for m in range(1 << n)}
        expected = {str(IndexSet.from_mask(m, n)): float(v)
                    for m, v in sector_masses(exp.psi_at(ex.T), b.partition).items()}
        extra["sector_probabilities"] = {"observed": observed, "expected": expected}
        if figures:
            from . import figures as fg
            fg.sector_bars(out, "sector_probabilities", observed, expected, f"t={ex.T:g}")
    return _check_report("markovization", rep, extra)


def _trajectories(b: Built, out: Path, figures: bool, workers) -> Outcome:
    ex = b.config.experiment
    law = b.law(ex.law)
    exp = b.experiment()
    g = b.grid
    seed = b.config.seed
    x0 = sample_config(wf.density(b.psi0), ex.n, stream(seed, 0), g)
    if isinstance(law, JumpLaw):
        proc = exp.jump_process(b.partition)
        pts = x0.reshape(ex.n, -1, 1)
        paths = proc.run(b.partition.masks(pts), np.where(b.partition.contains(pts), x0, np.nan),
                         ex.T, path_rngs(seed, ex.n), record_every=ex.record_every,
                         log_events=True)
        write_event_log(out / "events.csv", paths)
        with open(out / "sector_states.csv", "w") as fh:
            fh.write("t,path,real_set," + ",".join(f"x{j}" for j in range(g.num_particles)) + "\n")
            for k, t in enumerate(paths.times):
                for r in range(ex.n):
                    vals = ",".join(repr(float(v)) for v in paths.x[k, r])
                    fh.write(f"{t!r},{r},{int(paths.masks[k, r])},{vals}\n")
        body = {"kind": "trajectories", "pass": True, "reason": None, "law": "jump",
                "aborted": int(np.sum(paths.status != OK)),
                "mean_jumps": float(np.mean(paths.n_jumps))}
        return Outcome(True, body)
    moved = law.particles(g.num_particles)
    d = g.space_dim
    start = x0.reshape(ex.n, g.num_particles, d)[:, list(moved)].reshape(ex.n, -1)
    if law.unordered:
        from ..ensemble.sampling import sort_points
        start = sort_points(start, d)
    batch = BatchIntegrator(exp.track(law), law, exp.controls).run(
        start, exp.series.t0, ex.T, record_every=ex.record_every)
    trajs = []
    for r in range(ex.n):
        cfgs = [LabeledConfig(batch.x[k, r].reshape(len(moved), d), float(t))
                for k, t in enumerate(batch.times)]
        trajs.append(Trajectory(law.tag, batch.times, cfgs, tuple(i + 1 for i in moved),
                                {"flags": STATUS_NAMES[int(batch.status[r])]}))
    write_trajectory_csv(out / "trajectories.csv", trajs)
    if figures:
        from . import figures as fg
        fg.trajectory_plot(out, "trajectories", batch.times, batch.x, repr(law))
    body = {"kind": "trajectories", "pass": True, "reason": None, "law": repr(law),
            "aborted": int(np.sum(batch.status != OK))}
    return Outcome(True, body)


_KINDS = {"equivariance": _equivariance, "equivalence": _equivalence,
          "markovization": _markovization, "trajectories": _trajectories}


def manifest(cfg: RunConfig, workers, runtime: float) -> dict:
    data = cfg.model_dump(mode="json")
    return {"tool": "bohmlab", "config": data, "config_hash": config_hash(data),
            "seed": cfg.seed, "seeds": cfg.seeds(), "versions": versions(),
            "workers": workers, "runtime_seconds": round(runtime, 3),
            "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}


def run_config(cfg: RunConfig, out_dir=None, workers=None, figures: bool = False,
               velocity_factor: float = 1.0) -> Outcome:
    """Run ``cfg`` and write manifest.json, report.json and CSV tables to the output directory."""
    t0 = time.perf_counter()
    out = Path(out_dir if out_dir is not None else cfg.output)
    b = build(cfg, velocity_factor)
    out.mkdir(parents=True, exist_ok=True)
    res = _KINDS[cfg.experiment.kind](b, out, figures, workers)
    res.report["name"] = cfg.name
    _write_json(out / "report.json", res.report)
    _write_json(out / "manifest.json", manifest(cfg, workers, time.perf_counter() - t0))
    return res
