"""Seeded trajectory ensembles against a shared snapshot series."""
from __future__ import annotations

import copy
import hashlib
import json
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np
import scipy

from .. import __version__
from ..dynamics.integrate import OK, BatchIntegrator, Controls, build_series
from ..dynamics.laws import Law, ReducedLaw, SymmetrizedLaw
from ..errors import ValidationError
from ..varset.jumps import JumpProcess, path_rngs
from ..varset.partition import RegionPartition
from ..wavefield import fields as wf
from ..wavefield.evolve import SnapshotSeries
from ..wavefield.state import Potential, SpinorWaveFunction
from .sampling import sample_config

WORKERS_ENV = "BOHMLAB_WORKERS"
MAX_ABORTED_FRACTION = 0.01


class JumpLaw:
    """Marker for the variable-real-set jump process over a region partition."""

    tag = "jump"
    unordered = False

    def __init__(self, partition: RegionPartition):
        self.partition = partition

    def __repr__(self):
        return f"JumpLaw({list(self.partition.bounds)})"


AnyLaw = Union[Law, JumpLaw]


def seed_sequence(seed, *key) -> np.random.SeedSequence:
    entropy = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return np.random.SeedSequence(entropy, spawn_key=tuple(key))


def stream(seed, *key) -> np.random.Generator:
    """Named, reproducible RNG stream derived from ``seed``."""
    return np.random.default_rng(seed_sequence(seed, *key))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


class Experiment:
    """A state evolved over ``[0, T]`` with cached law tracks."""

    def __init__(self, psi0: SpinorWaveFunction, T: float, controls: Controls = Controls(),
                 potential: Optional[Potential] = None, series: Optional[SnapshotSeries] = None):
        self.psi0 = psi0
        self.T = float(T)
        self.controls = controls
        self.potential = potential
        self.series = series or build_series(psi0, T, controls, potential)
        self._tracks: Dict[str, object] = {}

    @property
    def grid(self):
        return self.psi0.grid

    def track(self, law: Law):
        key = law.tag
        if key not in self._tracks:
            self._tracks[key] = law.track(self.series)
        return self._tracks[key]

    def jump_process(self, partition: RegionPartition) -> JumpProcess:
        key = f"jump{partition.bounds}"
        if key not in self._tracks:
            self._tracks[key] = JumpProcess(self.series, partition, self.controls)
        return self._tracks[key]

    def psi_at(self, t: float) -> SpinorWaveFunction:
        return self.series[self.series.index_of(t)]


def equilibrium_density(law: AnyLaw, psi: SpinorWaveFunction) -> np.ndarray:
    """The density a law transports, on the grid of its moved coordinates."""
    if isinstance(law, ReducedLaw):
        return wf.reduced_density(psi, law.real_set)
    if isinstance(law, SymmetrizedLaw):
        return wf.symmetrized_density(psi).normalized
    return wf.density(psi)


@dataclass
class ExperimentPlan:
    law: AnyLaw
    T: float
    n: int
    seed: object = 0
    sample_times: Optional[Sequence[float]] = None
    initial_state: Optional[SpinorWaveFunction] = None  # wrong-density control
    workers: Optional[int] = None

    def __post_init__(self):
        if self.n < 100:
            raise ValidationError(f"n must be >= 100, got {self.n}")
        if not self.T >= 0:
            raise ValidationError("T must be nonnegative")

    def times(self):
        return tuple(self.sample_times) if self.sample_times is not None else (0.0, self.T)

    def describe(self) -> dict:
        return {"law": repr(self.law), "T": self.T, "n": self.n, "seed": self.seed,
                "sample_times": list(self.times())}


@dataclass
class EnsembleResult:
    """Samples at ``times``: ``samples[k]`` is ``(n, D)`` (NaN where aborted).

    For the jump law ``samples[k]`` is ``(n, N)`` with NaN for unreal
    particles and ``masks[k]`` holds the real-set bitmasks.
    """

    law: str
    times: np.ndarray
    samples: list
    status: np.ndarray
    masks: Optional[list] = None
    n_jumps: Optional[np.ndarray] = None
    tests: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)

    @property
    def aborted(self) -> int:
        return int(np.sum(self.status != OK))

    @property
    def aborted_fraction(self) -> float:
        return self.aborted / self.status.size

    @property
    def valid(self) -> bool:
        return self.aborted_fraction <= MAX_ABORTED_FRACTION

    def at(self, t: float):
        """Non-aborted samples at ``t``; ``(masks, x)`` for the jump law."""
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9:
            raise ValidationError(f"no samples recorded at t={t}")
        ok = self.status == OK
        if self.masks is not None:
            return self.masks[k][ok], self.samples[k][ok]
        return self.samples[k][ok]

    def write_csv(self, path) -> None:
        """Sample table: ``t, index, status[, real_set], x0, x1, ...``."""
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            width = self.samples[0].shape[1]
            head = ["t", "index", "status"] + (["real_set"] if self.masks is not None else [])
            w.writerow(head + [f"x{j}" for j in range(width)])
            for k, t in enumerate(self.times):
                s = self.samples[k]
                for i in range(s.shape[0]):
                    row = [repr(float(t)), i, int(self.status[i])]
                    if self.masks is not None:
                        row.append(int(self.masks[k][i]))
                    w.writerow(row + [repr(float(v)) for v in s[i]])


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def versions() -> dict:
    return {"bohmlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _chunks(n: int, workers: int):
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def initial_samples(plan: ExperimentPlan, exp: Experiment) -> np.ndarray:
    psi = plan.initial_state or exp.psi0
    rng = stream(plan.seed, 0)
    g = psi.grid
    law = plan.law
    if isinstance(law, JumpLaw):
        return sample_config(wf.density(psi), plan.n, rng, g)
    sub = law.coord_grid(g)
    return sample_config(equilibrium_density(law, psi), plan.n, rng, sub,
                         unordered=law.unordered, points_dim=g.space_dim)


def run_ensemble(plan: ExperimentPlan, experiment: Experiment) -> EnsembleResult:
    """Integrate ``plan.n`` paths; deterministic in ``plan.seed`` for any worker count."""
    exp = experiment
    if plan.T > exp.T + 1e-12:
        raise ValidationError(f"plan horizon {plan.T} exceeds the evolved horizon {exp.T}")
    workers = plan.workers or default_workers()
    times = plan.times()
    x0 = initial_samples(plan, exp)
    law = plan.law
    chunks = _chunks(plan.n, workers)

    if isinstance(law, JumpLaw):
        proc = exp.jump_process(law.partition)
        part = law.partition
        d = exp.grid.space_dim
        pts = x0.reshape(plan.n, -1, d)
        m0 = part.masks(pts)
        xx = np.where(part.contains(pts), x0, np.nan)
        rngs = path_rngs(plan.seed, plan.n)

        def work(ab):
            a, b = ab
            p = copy.copy(proc)
            return p.run(m0[a:b], xx[a:b], plan.T, rngs[a:b])
    else:
        track = exp.track(law)

        def work(ab):
            a, b = ab
            return BatchIntegrator(track, law, exp.controls).run(x0[a:b], exp.series.t0, plan.T)

    if workers == 1:
        parts = [work(c) for c in chunks]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, chunks))

    rec_times = parts[0].times
    idx = [int(np.argmin(np.abs(rec_times - t))) for t in times]
    for t, k in zip(times, idx):
        if abs(rec_times[k] - t) > 1e-9:
            raise ValidationError(f"sample time {t} is not on the macro step grid")
    status = np.concatenate([p.status for p in parts])
    samples = [np.concatenate([p.x[k] for p in parts]) for k in idx]
    manifest = {"plan": plan.describe(), "config_hash": config_hash(plan.describe()),
                "seed": plan.seed, "versions": versions(), "workers": workers,
                "argv": list(sys.argv[:1])}
    if isinstance(law, JumpLaw):
        masks = [np.concatenate([p.masks[k] for p in parts]) for k in idx]
        return EnsembleResult("jump", np.array(times), samples, status, masks,
                              np.concatenate([p.n_jumps for p in parts]), manifest=manifest)
    ok = status == OK
    for s in samples:
        s[~ok] = np.nan
    return EnsembleResult(law.tag, np.array(times), samples, status, manifest=manifest)
