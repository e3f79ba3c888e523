"""RK4 integration of guidance laws against a snapshot series.

Rows of a batch are advanced independently (elementwise arithmetic only), so
a trajectory's path does not depend on which other rows share its batch.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import TrajectoryAbort, ValidationError
from ..wavefield.configs import LabeledConfig, UnorderedConfig, as_positions, canonical_order
from ..wavefield.evolve import SnapshotSeries, evolve_series, kinetic_symbol
from ..wavefield.state import Potential, SpinorWaveFunction
from .laws import NODE_FLOOR, Law, SymmetrizedLaw
from .permutation import Permutation, apply_permutation
from .track import FieldTrack

OK, NODE, DOMAIN = 0, 1, 2
STATUS_NAMES = {OK: "", NODE: "aborted:node", DOMAIN: "aborted:domain"}


@dataclass(frozen=True)
class Controls:
    """Step controls.

    ``dt_traj`` is the macro step (defaults to the snapshot stride); each
    macro step takes ``substeps`` RK4 steps, halved up to ``max_halvings``
    times when a stage hits the node floor, leaves the box, or a step moves
    a coordinate more than ``eta * dx``.
    """

    stride: float = 0.01
    wave_dt: Optional[float] = None
    dt_traj: Optional[float] = None
    substeps: int = 2
    eta: float = 0.5
    max_halvings: int = 10
    node_floor: float = NODE_FLOOR

    def __post_init__(self):
        if self.substeps < 1 or self.max_halvings < 0 or not self.eta > 0:
            raise ValidationError(f"bad step controls {self}")

    def halved(self) -> "Controls":
        """Same macro step with twice the RK4 substeps and half the displacement cap."""
        return Controls(self.stride, self.wave_dt, self.dt_traj, self.substeps * 2,
                        self.eta / 2, self.max_halvings, self.node_floor)

    @property
    def macro_step(self) -> float:
        return self.dt_traj if self.dt_traj is not None else self.stride


def default_wave_dt(psi: SpinorWaveFunction, stride: float) -> float:
    """Largest ``stride / n`` keeping the kinetic phase per step below pi/2."""
    kmax = float(kinetic_symbol(psi.grid, psi.params).max())
    n = max(1, math.ceil(kmax * stride / (math.pi / 2)))
    return stride / n


def build_series(psi0: SpinorWaveFunction, t_end: float, controls: Controls,
                 potential: Optional[Potential] = None) -> SnapshotSeries:
    dt = controls.wave_dt or default_wave_dt(psi0, controls.stride)
    return evolve_series(psi0, psi0.time + t_end, controls.stride, dt, potential)


@dataclass
class PathBatch:
    """Recorded coordinates ``x`` of shape ``(n_times, n, D)`` with per-row diagnostics."""

    times: np.ndarray
    x: np.ndarray
    status: np.ndarray
    min_den: np.ndarray
    substeps: np.ndarray
    abort_time: np.ndarray

    @property
    def aborted(self) -> np.ndarray:
        return self.status != OK

    def final(self) -> np.ndarray:
        return self.x[-1]


class BatchIntegrator:
    def __init__(self, track: FieldTrack, law: Law, controls: Controls = Controls()):
        self.track = track
        self.law = law
        self.controls = controls
        self.dx = track.grid.dx

    def velocity(self, t, x):
        inside = self.track.inside(x)
        xs = np.where(inside[:, None], x, self.track.grid.lo)
        v, den, ok = self.law.velocities(self.track.sample(t, xs), self.controls.node_floor)
        return v, np.where(inside, den, np.inf), ok, inside

    def rk4(self, x, t, h):
        hh = h[:, None]
        k1, d1, ok1, in1 = self.velocity(t, x)
        k2, d2, ok2, in2 = self.velocity(t + h / 2, x + hh / 2 * k1)
        k3, d3, ok3, in3 = self.velocity(t + h / 2, x + hh / 2 * k2)
        k4, d4, ok4, in4 = self.velocity(t + h, x + hh * k3)
        xn = x + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        node = ~(ok1 & ok2 & ok3 & ok4)
        dom = ~(in1 & in2 & in3 & in4) | ~self.track.inside(xn)
        mden = np.minimum(np.minimum(d1, d2), np.minimum(d3, d4))
        return xn, node, dom, mden

    def advance(self, x, t, h, depth=0):
        """One step of size ``h[r]`` from ``t[r]`` with recursive halving.

        Returns new coordinates, status codes, min denominator, step count.
        """
        n = x.shape[0]
        xn, node, dom, mden = self.rk4(x, t, h)
        disp = np.max(np.abs(xn - x), axis=1) if x.shape[1] else np.zeros(n)
        big = ~(disp <= self.controls.eta * self.dx)
        retry = node | dom | big
        status = np.zeros(n, dtype=np.int8)
        count = np.ones(n, dtype=np.int64)
        if not retry.any():
            return xn, status, mden, count
        idx = np.flatnonzero(retry)
        if depth >= self.controls.max_halvings:
            status[idx] = np.where(dom[idx], DOMAIN, NODE)
            xn[idx] = np.nan
            return xn, status, mden, count
        h2 = h[idx] / 2
        x1, s1, m1, c1 = self.advance(x[idx], t[idx], h2, depth + 1)
        alive = s1 == OK
        x2 = x1.copy()
        s2 = s1.copy()
        m2 = m1.copy()
        c2 = c1.copy()
        if alive.any():
            a = np.flatnonzero(alive)
            xa, sa, ma, ca = self.advance(x1[a], t[idx][a] + h2[a], h2[a], depth + 1)
            x2[a], s2[a] = xa, sa
            m2[a] = np.minimum(m1[a], ma)
            c2[a] = c1[a] + ca
        xn[idx] = x2
        status[idx] = s2
        mden[idx] = np.minimum(mden[idx], m2)
        count[idx] = c2
        return xn, status, mden, count

    def run(self, x0: np.ndarray, t0: float, T: float, record_every: int = 1) -> PathBatch:
        c = self.controls
        H = c.macro_step
        n_macro = int(round(T / H))
        if n_macro < 0 or abs(n_macro * H - T) > 1e-9 * max(1.0, T):
            raise ValidationError(f"T={T} is not a multiple of the macro step {H}")
        if t0 < self.track.t0 - 1e-12 or t0 + T > self.track.t_end + 1e-9:
            raise ValidationError(f"[{t0}, {t0 + T}] exceeds the snapshot horizon "
                                  f"[{self.track.t0}, {self.track.t_end}]")
        x = np.array(x0, dtype=float)
        n = x.shape[0]
        status = np.zeros(n, dtype=np.int8)
        min_den = np.full(n, np.inf)
        steps = np.zeros(n, dtype=np.int64)
        abort_time = np.full(n, np.nan)
        bad0 = ~self.track.inside(x)
        status[bad0] = DOMAIN
        x[bad0] = np.nan
        h = H / c.substeps
        times = [t0]
        rec = [x.copy()]
        for s in range(n_macro):
            for u in range(c.substeps):
                t = t0 + (s * c.substeps + u) * h
                a = np.flatnonzero(status == OK)
                if a.size == 0:
                    break
                xa, sa, ma, ca = self.advance(x[a], np.full(a.size, t), np.full(a.size, h))
                x[a] = xa
                status[a] = sa
                min_den[a] = np.minimum(min_den[a], ma)
                steps[a] += ca
                abort_time[a[sa != OK]] = t
            if (s + 1) % record_every == 0 or s + 1 == n_macro:
                times.append(t0 + (s + 1) * H)
                rec.append(x.copy())
        return PathBatch(np.array(times), np.stack(rec), status, min_den, steps, abort_time)


@dataclass
class Trajectory:
    """A single integrated path.

    ``configs`` holds :class:`LabeledConfig` objects for the full and reduced
    laws and :class:`UnorderedConfig` objects for the symmetrized law;
    ``labels`` are the 1-based particle labels of the moved coordinates.
    """

    law: str
    times: np.ndarray
    configs: list
    labels: tuple
    diagnostics: dict = field(default_factory=dict)

    @property
    def positions(self) -> np.ndarray:
        return np.stack([c.points if isinstance(c, UnorderedConfig) else c.positions
                         for c in self.configs])

    def to_csv(self, path) -> None:
        write_trajectory_csv(path, [self])


def write_trajectory_csv(path, trajectories: List[Trajectory]) -> None:
    """CSV columns ``t, particle, axis, value, law, flags``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "particle", "axis", "value", "law", "flags"])
        for tr in trajectories:
            flags = tr.diagnostics.get("flags", "")
            pos = tr.positions
            for ti, t in enumerate(tr.times):
                for p in range(pos.shape[1]):
                    for a in range(pos.shape[2]):
                        w.writerow([repr(float(t)), tr.labels[p], a, repr(float(pos[ti, p, a])),
                                    tr.law, flags])


def _start_array(law: Law, start, n: int, d: int) -> np.ndarray:
    moved = law.particles(n)
    p = as_positions(start)
    if p.shape != (len(moved), d):
        raise ValidationError(f"start: expected {len(moved)} positions of dimension {d}, got {p.shape}")
    if isinstance(law, SymmetrizedLaw):
        UnorderedConfig(p)  # raises on coincident points
    return p.reshape(1, -1)


def integrate(psi0: SpinorWaveFunction, start, law: Law, T: float,
              controls: Controls = Controls(), potential: Optional[Potential] = None,
              series: Optional[SnapshotSeries] = None, track: Optional[FieldTrack] = None,
              raise_on_abort: bool = True) -> Trajectory:
    """Integrate a single configuration from ``psi0.time`` to ``psi0.time + T``."""
    g = psi0.grid
    n, d = g.num_particles, g.space_dim
    x0 = _start_array(law, start, n, d)
    if track is None:
        series = series or build_series(psi0, T, controls, potential)
        track = law.track(series)
    batch = BatchIntegrator(track, law, controls).run(x0, psi0.time, T)
    st = int(batch.status[0])
    if st != OK and raise_on_abort:
        raise TrajectoryAbort(f"trajectory aborted ({STATUS_NAMES[st]}) at t={batch.abort_time[0]}",
                              time=float(batch.abort_time[0]), reason=STATUS_NAMES[st])
    moved = law.particles(n)
    configs = []
    for ti, t in enumerate(batch.times):
        p = batch.x[ti, 0].reshape(len(moved), d)
        if law.unordered and np.all(np.isfinite(p)):
            configs.append(UnorderedConfig(p, float(t)))
        else:
            configs.append(LabeledConfig(p, float(t)))
    diag = {"min_denominator": float(batch.min_den[0]), "substeps": int(batch.substeps[0]),
            "flags": STATUS_NAMES[st], "status": st}
    return Trajectory(law.tag, batch.times, configs, tuple(i + 1 for i in moved), diag)


@dataclass
class RelabelReport:
    passed: bool
    max_deviation: float
    tolerance: float
    sigma: tuple


def relabel_then_integrate_check(psi0: SpinorWaveFunction, q0, sigma: Permutation, T: float,
                                 controls: Controls = Controls(), tolerance: float = 1e-9,
                                 potential: Optional[Potential] = None,
                                 track: Optional[FieldTrack] = None) -> RelabelReport:
    """Integrate the symmetrized law from ``q0`` and from ``sigma(q0)``.

    The paths must agree as point sets at every recorded time; slot ``j`` of
    the first run is compared with slot ``sigma(j)`` of the second.
    """
    law = SymmetrizedLaw()
    g = psi0.grid
    p0 = as_positions(q0)
    if track is None:
        track = law.track(build_series(psi0, T, controls, potential))
    integ = BatchIntegrator(track, law, controls)
    n, d = g.num_particles, g.space_dim
    xa = integ.run(p0.reshape(1, -1), psi0.time, T)
    xb = integ.run(apply_permutation(sigma, p0).reshape(1, -1), psi0.time, T)
    if xa.aborted.any() or xb.aborted.any():
        raise TrajectoryAbort("relabel check: trajectory aborted")
    pa = xa.x[:, 0].reshape(-1, n, d)
    pb = apply_permutation(sigma.inverse(), xb.x[:, 0].reshape(-1, n, d))
    dev = float(np.max(np.abs(pa - pb)))
    # set-wise comparison as well (canonical order)
    for ta, tb in zip(xa.x[:, 0].reshape(-1, n, d), xb.x[:, 0].reshape(-1, n, d)):
        sa, sb = ta[canonical_order(ta)], tb[canonical_order(tb)]
        dev = max(dev, float(np.max(np.abs(sa - sb))))
    return RelabelReport(dev <= tolerance, dev, tolerance, sigma.images)
