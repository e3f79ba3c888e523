"""Jump process on the disjoint union of real-particle configuration spaces.

Between jumps the real particles follow sector current over sector density.
A real particle reaching a face of R leaves deterministically. An unreal
particle appears on a face at the positive part of the inward boundary flux
divided by the sector density; candidate times come from a dominating
Poisson clock of rate ``B`` (thinning), with ``B`` set each stride to twice
the largest rate seen in the previous stride and raised whenever a substep's
rate exceeds it.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..dynamics.integrate import DOMAIN, NODE, OK, BatchIntegrator, Controls, build_series
from ..dynamics.laws import FullLaw, Law
from ..dynamics.track import FieldTrack
from ..errors import TrajectoryAbort, ValidationError
from ..wavefield.configs import IndexSet
from ..wavefield.evolve import SnapshotSeries
from ..wavefield.state import Potential, SpinorWaveFunction
from .fibers import SectorQuadrature, sector_channels
from .partition import JumpEvent, ProjectedState, RegionPartition

EVENT_OVERFLOW = 3
MAX_EVENTS_PER_SUBSTEP = 16


class _SectorLaw(Law):
    tag = "sector"

    def __init__(self, n_real: int):
        super().__init__()
        self.n_real = n_real

    def velocities(self, sampled, floor):
        den = sampled[:, 0]
        ok = den >= floor
        safe = np.where(ok, den, 1.0)
        return sampled[:, 1:1 + self.n_real] / safe[:, None], den, ok


@dataclass
class SectorPaths:
    """One-time states of many paths: ``masks (n_times, n)``, ``x (n_times, n, N)``.

    Coordinates of unreal particles are NaN. ``events`` holds the jump log per
    path when it was recorded.
    """

    times: np.ndarray
    masks: np.ndarray
    x: np.ndarray
    status: np.ndarray
    n_jumps: np.ndarray
    events: Optional[List[List[JumpEvent]]] = None

    @property
    def aborted(self):
        return self.status != OK

    def index_of(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > 1e-9:
            raise ValidationError(f"no recorded time {t}")
        return j

    def state(self, path: int, ti: int) -> ProjectedState:
        n = self.x.shape[2]
        m = int(self.masks[ti, path])
        rs = IndexSet.from_mask(m, n)
        return ProjectedState(rs, self.x[ti, path, list(rs.indices)].reshape(len(rs), 1),
                              float(self.times[ti]))


class JumpProcess:
    """Vectorised simulator for d = 1 over a fixed snapshot series."""

    def __init__(self, series: SnapshotSeries, partition: RegionPartition,
                 controls: Controls = Controls()):
        g = series.grid
        if g.space_dim != 1:
            raise ValidationError("the jump process is implemented for space_dim = 1")
        partition.for_grid(g)
        self.series = series
        self.partition = partition
        self.controls = controls
        self.grid = g
        self.n = g.num_particles
        quad = SectorQuadrature(g, partition)
        self.faces = quad.faces
        self.lo, self.hi = partition.bounds[0]
        self.tracks: Dict[int, FieldTrack] = {}
        self.integrators: Dict[int, BatchIntegrator] = {}
        self.real: Dict[int, list] = {}
        self.channels: Dict[int, list] = {}
        for mask in range(1 << self.n):
            stacks = []
            for s in series.snapshots:
                st, real, labels = sector_channels(s, quad, mask)
                stacks.append(st)
            sub = g.sub(len(real))
            tr = FieldTrack(np.stack(stacks), sub, len(real), series.t0, series.stride)
            self.tracks[mask] = tr
            self.integrators[mask] = BatchIntegrator(tr, _SectorLaw(len(real)), controls)
            self.real[mask] = real
            self.channels[mask] = labels

    # -- rates ---------------------------------------------------------------
    def rates(self, mask: int, t, xr):
        """Creation rates ``(n, n_channels)`` at real coordinates ``xr``."""
        r = len(self.real[mask])
        tr = self.tracks[mask]
        inside = tr.inside(xr)
        xs = np.where(inside[:, None], xr, self.grid.lo) if r else xr
        s = tr.sample(t, xs)
        den = s[:, 0]
        safe = np.where(den >= self.controls.node_floor, den, np.inf)
        return np.maximum(s[:, 1 + r:], 0.0) / safe[:, None]

    @staticmethod
    def _total(lam):
        tot = np.zeros(lam.shape[0])
        for c in range(lam.shape[1]):
            tot = tot + lam[:, c]
        return tot

    # -- simulation ----------------------------------------------------------
    def run(self, masks0, x0, T: float, rngs: Sequence[np.random.Generator],
            t0: Optional[float] = None, record_every: int = 1,
            log_events: bool = False) -> SectorPaths:
        """Simulate ``len(rngs)`` paths from sector states ``(masks0, x0)``."""
        c = self.controls
        t0 = self.series.t0 if t0 is None else t0
        H = c.macro_step
        n_macro = int(round(T / H))
        if abs(n_macro * H - T) > 1e-9 * max(1.0, T):
            raise ValidationError(f"T={T} is not a multiple of the macro step {H}")
        if t0 + T > self.series.t_end + 1e-9:
            raise ValidationError("T beyond the snapshot horizon")
        self.mask = np.array(masks0, dtype=np.int64).copy()
        self.x = np.array(x0, dtype=float).copy()
        npath = self.x.shape[0]
        self.status = np.zeros(npath, dtype=np.int8)
        self.n_jumps = np.zeros(npath, dtype=np.int64)
        self.rngs = list(rngs)
        self.res = np.array([g.exponential() for g in self.rngs])
        self.bound = np.zeros(npath)
        self.max_seen = np.zeros(npath)
        self.events = [[] for _ in range(npath)] if log_events else None
        for mask in np.unique(self.mask):
            sel = np.flatnonzero(self.mask == mask)
            lam = self.rates(int(mask), np.full(sel.size, t0), self.x[sel][:, self.real[mask]])
            self.max_seen[sel] = self._total(lam)
        h = H / c.substeps
        times, rec_m, rec_x = [t0], [self.mask.copy()], [self.x.copy()]
        for s in range(n_macro):
            self.bound = 2.0 * self.max_seen
            self.max_seen = np.zeros(npath)
            for u in range(c.substeps):
                t = t0 + (s * c.substeps + u) * h
                rows = np.flatnonzero(self.status == OK)
                if rows.size:
                    self._substep(rows, np.full(rows.size, t), np.full(rows.size, t + h), 0)
            if (s + 1) % record_every == 0 or s + 1 == n_macro:
                times.append(t0 + (s + 1) * H)
                rec_m.append(self.mask.copy())
                rec_x.append(np.where((self.status == OK)[:, None], self.x, np.nan))
        return SectorPaths(np.array(times), np.stack(rec_m), np.stack(rec_x),
                           self.status.copy(), self.n_jumps.copy(), self.events)

    def _abort(self, rows, code):
        self.status[rows] = code
        self.x[rows] = np.nan

    def _log(self, row, t, src_mask, src_x, dst_mask, dst_x, particle, face, kind):
        if self.events is None:
            return
        def st(m, x):
            rs = IndexSet.from_mask(int(m), self.n)
            return ProjectedState(rs, np.asarray(x)[list(rs.indices)].reshape(len(rs), 1), t)
        self.events[row].append(JumpEvent(float(t), st(src_mask, src_x), st(dst_mask, dst_x),
                                          particle + 1, face, kind))

    def _substep(self, rows, t0, t1, depth):
        if depth > MAX_EVENTS_PER_SUBSTEP:
            self._abort(rows, EVENT_OVERFLOW)
            return
        rem_rows, rem_t0, rem_t1 = [], [], []
        masks = self.mask[rows]
        for mask in np.unique(masks):
            mask = int(mask)
            sel = np.flatnonzero(masks == mask)
            g = rows[sel]
            a0, a1 = t0[sel], t1[sel]
            h = a1 - a0
            real = self.real[mask]
            integ = self.integrators[mask]
            xr = self.x[g][:, real]
            x1, st, _, _ = integ.advance(xr, a0, h)
            bad = st != OK
            if bad.any():
                self._abort(g[bad], np.where(st[bad] == DOMAIN, DOMAIN, NODE))
                keep = ~bad
                g, a0, a1, h, xr, x1 = g[keep], a0[keep], a1[keep], h[keep], xr[keep], x1[keep]
            if g.size == 0:
                continue
            # deterministic exit through a face of R
            te = a1.copy()
            exit_pos = np.full(g.size, -1)
            if real:
                below = x1 < self.lo
                above = x1 > self.hi
                with np.errstate(divide="ignore", invalid="ignore"):
                    f = np.where(below, (xr - self.lo) / (xr - x1),
                                 np.where(above, (self.hi - xr) / (x1 - xr), np.inf))
                f = np.clip(f, 0.0, np.inf)
                fmin = np.min(f, axis=1)
                ex = np.isfinite(fmin)
                exit_pos[ex] = np.argmin(f[ex], axis=1)
                te[ex] = a0[ex] + np.minimum(fmin[ex], 1.0) * h[ex]
            xe = x1.copy()
            ex = exit_pos >= 0
            if ex.any():
                xp, sp, _, _ = integ.advance(xr[ex], a0[ex], te[ex] - a0[ex])
                xe[ex] = xp
                if np.any(sp != OK):
                    idx = np.flatnonzero(ex)[sp != OK]
                    self._abort(g[idx], NODE)
            alive = self.status[g] == OK
            # creation by thinning over [a0, te]
            lam0 = self.rates(mask, a0, xr)
            lame = self.rates(mask, te, np.where(np.isfinite(xe), xe, xr))
            tot0, tote = self._total(lam0), self._total(lame)
            peak = np.maximum(tot0, tote)
            self.max_seen[g] = np.maximum(self.max_seen[g], peak)
            viol = peak > self.bound[g]
            self.bound[g] = np.where(viol, 2.0 * peak, self.bound[g])
            B = self.bound[g]
            span = te - a0
            avail = B * span
            cand = alive & (B > 0) & (self.res[g] <= avail) & (span > 0)
            self.res[g] = np.where(alive & ~cand, self.res[g] - avail, self.res[g])
            created = np.zeros(g.size, dtype=bool)
            tau = np.zeros(g.size)
            chan = np.zeros(g.size, dtype=np.int64)
            for j in np.flatnonzero(cand):
                row = g[j]
                rng = self.rngs[row]
                b = B[j]
                tj = a0[j] + self.res[row] / b
                while True:
                    fr = (tj - a0[j]) / span[j]
                    lam = (1.0 - fr) * lam0[j] + fr * lame[j]
                    tot = float(np.sum(lam))
                    if rng.random() * b < tot:
                        cum = np.cumsum(lam)
                        chan[j] = min(int(np.searchsorted(cum, rng.random() * tot, side="right")),
                                      lam.size - 1)
                        created[j] = True
                        tau[j] = tj
                        self.res[row] = rng.exponential()
                        break
                    e = rng.exponential()
                    if tj + e / b < te[j]:
                        tj += e / b
                        continue
                    self.res[row] = e - b * (te[j] - tj)
                    break
            # apply creations first; a later exit is re-detected in the remainder
            if created.any():
                ci = np.flatnonzero(created)
                xc, sc, _, _ = integ.advance(xr[ci], a0[ci], tau[ci] - a0[ci])
                for jj, j in enumerate(ci):
                    row = g[j]
                    if sc[jj] != OK:
                        self._abort(np.array([row]), NODE)
                        continue
                    k, face = self.channels[mask][chan[j]]
                    old_x = self.x[row].copy()
                    newx = old_x.copy()
                    newx[real] = xc[jj]
                    src_x = newx.copy()
                    newx[k] = face.position
                    self._log(row, tau[j], mask, src_x, mask | 1 << k, newx, k, face.name, "create")
                    self.x[row] = newx
                    self.mask[row] = mask | 1 << k
                    self.n_jumps[row] += 1
                    rem_rows.append(row)
                    rem_t0.append(tau[j])
                    rem_t1.append(a1[j])
            exits = np.flatnonzero(alive & ex & ~created)
            for j in exits:
                row = g[j]
                if self.status[row] != OK:
                    continue
                k = real[exit_pos[j]]
                newx = self.x[row].copy()
                newx[real] = xe[j]
                src_x = newx.copy()
                face = "lo" if x1[j, exit_pos[j]] < self.lo else "hi"
                newx[k] = np.nan
                self._log(row, te[j], mask, src_x, mask & ~(1 << k), newx, k, face, "annihilate")
                self.x[row] = newx
                self.mask[row] = mask & ~(1 << k)
                self.n_jumps[row] += 1
                if a1[j] - te[j] > 1e-14:
                    rem_rows.append(row)
                    rem_t0.append(te[j])
                    rem_t1.append(a1[j])
            plain = np.flatnonzero(alive & ~ex & ~created)
            if plain.size and real:
                xx = self.x[g[plain]]
                xx[:, real] = x1[plain]
                self.x[g[plain]] = xx
        if rem_rows:
            r = np.array(rem_rows)
            ok = self.status[r] == OK
            if ok.any():
                self._substep(r[ok], np.array(rem_t0)[ok], np.array(rem_t1)[ok], depth + 1)


def path_rngs(seed, n: int, stream: int = 2) -> List[np.random.Generator]:
    """Independent generator per path index, derived from ``seed``."""
    entropy = list(seed) if isinstance(seed, (list, tuple)) else [int(seed)]
    return [np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(stream, i)))
            for i in range(n)]


def simulate_jump_process(psi0: SpinorWaveFunction, initial: ProjectedState, T: float,
                          rng: np.random.Generator, partition: RegionPartition,
                          controls: Controls = Controls(),
                          potential: Optional[Potential] = None,
                          series: Optional[SnapshotSeries] = None):
    """Single path from ``initial``; returns ``(states, events)``.

    ``states`` is the list of :class:`ProjectedState` at each macro step.
    """
    series = series or build_series(psi0, T, controls, potential)
    proc = JumpProcess(series, partition, controls)
    x0 = np.full((1, psi0.grid.num_particles), np.nan)
    x0[0, list(initial.real_set.indices)] = initial.coords[:, 0]
    out = proc.run([initial.mask], x0, T, [rng], t0=psi0.time, log_events=True)
    if out.aborted[0]:
        raise TrajectoryAbort(f"jump path aborted (code {int(out.status[0])})")
    states = [out.state(0, i) for i in range(len(out.times))]
    return states, out.events[0]


def projection_oracle(series: SnapshotSeries, partition: RegionPartition, x0: np.ndarray,
                      T: float, controls: Controls = Controls(),
                      track: Optional[FieldTrack] = None) -> SectorPaths:
    """Conventional trajectories from ``x0`` (``(n, N)``), projected onto sectors."""
    n = series.grid.num_particles
    track = track or FullLaw().track(series)
    batch = BatchIntegrator(track, FullLaw(), controls).run(
        np.asarray(x0, dtype=float), series.t0, T)
    pts = batch.x.reshape(batch.x.shape[0], batch.x.shape[1], n, 1)
    masks = np.stack([partition.masks(p) for p in pts])
    inside = np.stack([partition.contains(p) for p in pts])
    xs = np.where(inside, batch.x, np.nan)
    masks = np.where(batch.status[None, :] == OK, masks, -1)
    return SectorPaths(batch.times, masks, xs, batch.status.astype(np.int8),
                       np.zeros(batch.x.shape[1], dtype=np.int64))


def write_event_log(path, paths: SectorPaths) -> None:
    """CSV ``t, src_set, dst_set, particle, face, coords...`` (one row per jump)."""
    if paths.events is None:
        raise ValidationError("paths were simulated without log_events")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "src_set", "dst_set", "particle", "face", "coords"])
        for evs in paths.events:
            for e in evs:
                w.writerow([repr(e.time), e.source.mask, e.destination.mask, e.particle, e.face]
                           + [repr(float(v)) for v in e.destination.coords.ravel()])


def sector_histogram_json(counts: Dict[int, np.ndarray], expected: Dict[int, np.ndarray],
                          n_particles: int) -> str:
    """Sector-law histograms keyed by real-set bitmask."""
    out = {}
    for mask in sorted(set(counts) | set(expected)):
        out[str(mask)] = {
            "real_set": str(IndexSet.from_mask(mask, n_particles)),
            "counts": np.asarray(counts.get(mask, [])).tolist(),
            "expected": np.asarray(expected.get(mask, [])).tolist(),
        }
    return json.dumps(out, indent=1, sort_keys=True)
