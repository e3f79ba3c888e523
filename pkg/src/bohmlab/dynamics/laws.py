"""The three guidance laws and their grid channels.

Every law is expressed as a denominator channel and one numerator channel
per moved coordinate. Numerators and denominators are interpolated
separately and divided only at the particle positions.
"""
from __future__ import annotations

import numpy as np

from ..errors import CoincidenceError, NodeProximityError, ValidationError
from ..wavefield import fields as wf
from ..wavefield.configs import IndexSet, UnorderedConfig, as_positions
from ..wavefield.evolve import SnapshotSeries
from ..wavefield.grid import Grid
from ..wavefield.interp import interpolate
from ..wavefield.state import SpinorWaveFunction
from .track import FieldTrack

NODE_FLOOR = 1e-12


class Law:
    """Base class; subclasses define ``channels`` for one snapshot."""

    tag = "law"
    unordered = False

    def __init__(self, velocity_scale: float = 1.0):
        # != 1 only for negative controls
        self.velocity_scale = float(velocity_scale)

    def particles(self, n: int) -> tuple:
        """0-based indices of the particles this law moves."""
        return tuple(range(n))

    def coord_grid(self, grid: Grid) -> Grid:
        return grid.sub(len(self.particles(grid.num_particles)))

    def channels(self, psi: SpinorWaveFunction) -> np.ndarray:
        raise NotImplementedError

    def track(self, series: SnapshotSeries) -> FieldTrack:
        stack = np.stack([self.channels(s) for s in series.snapshots])
        g = self.coord_grid(series.grid)
        return FieldTrack(stack, g, g.n_axes, series.t0, series.stride)

    def velocities(self, sampled: np.ndarray, floor: float = NODE_FLOOR):
        """Split sampled channels into velocities ``(n, D)`` and denominators."""
        den = sampled[:, 0]
        ok = den >= floor
        safe = np.where(ok, den, 1.0)
        v = self.velocity_scale * sampled[:, 1:] / safe[:, None]
        return v, den, ok

    def __repr__(self):
        s = f", velocity_scale={self.velocity_scale}" if self.velocity_scale != 1 else ""
        return f"{type(self).__name__}({s.lstrip(', ')})"


class FullLaw(Law):
    """Conventional guidance: ``v_i = j_i / rho`` on labeled configurations."""

    tag = "full"

    def channels(self, psi):
        b = wf.density_current(psi)
        g = psi.grid
        return np.concatenate([b.rho[None], b.currents.reshape((-1,) + g.shape)])


class ReducedLaw(Law):
    """Only the particles in ``real_set`` exist; unreal coordinates are integrated out."""

    def __init__(self, real_set: IndexSet, velocity_scale: float = 1.0):
        super().__init__(velocity_scale)
        if len(real_set) == 0:
            raise ValidationError("reduced law needs a nonempty real_set")
        self.real_set = real_set

    @property
    def tag(self):
        return f"reduced{self.real_set}"

    def particles(self, n):
        if n != self.real_set.n:
            raise ValidationError(f"real_set over {self.real_set.n} labels, state has {n}")
        return self.real_set.indices

    def channels(self, psi):
        g = psi.grid
        self.particles(g.num_particles)
        out = [wf.reduced_density(psi, self.real_set)]
        for i in self.real_set.indices:
            for c in range(g.space_dim):
                out.append(wf.reduced_current(psi, self.real_set, i, c))
        return np.stack(out)

    def __repr__(self):
        return f"ReducedLaw({self.real_set})"


class SymmetrizedLaw(Law):
    """Permutation-summed current over permutation-summed density."""

    tag = "symmetrized"
    unordered = True

    def channels(self, psi):
        g = psi.grid
        wf.check_permutation_budget(g.num_particles)
        b = wf.density_current(psi)
        rho = wf.symmetrize_field(b.rho, g.num_particles, g.space_dim)
        cur = wf.symmetrized_currents(psi, b)
        return np.concatenate([rho[None], cur.reshape((-1,) + g.shape)])


def law_from_tag(tag: str, n: int, real_set=None, velocity_scale: float = 1.0) -> Law:
    if tag == "full":
        return FullLaw(velocity_scale)
    if tag == "symmetrized":
        return SymmetrizedLaw(velocity_scale)
    if tag == "reduced":
        if real_set is None:
            raise ValidationError("reduced law requires real_set")
        rs = real_set if isinstance(real_set, IndexSet) else IndexSet(real_set, n)
        return ReducedLaw(rs, velocity_scale)
    raise ValidationError(f"unknown law {tag!r}")


class VelocityField:
    """A law evaluated on one snapshot, for repeated point queries."""

    def __init__(self, law: Law, psi: SpinorWaveFunction):
        self.law = law
        self.psi = psi
        self.grid = law.coord_grid(psi.grid)
        self.values = law.channels(psi)

    def at(self, points: np.ndarray, floor: float = NODE_FLOOR):
        """Velocities ``(n, D)`` and denominators at rows of ``points``."""
        pts = np.asarray(points, dtype=float)
        sampled = interpolate(self.values, pts, self.grid).T
        return self.law.velocities(sampled, floor)


def _single(law, psi, q, n_moved):
    d = psi.grid.space_dim
    p = as_positions(q)
    if p.shape != (n_moved, d):
        raise ValidationError(f"expected {n_moved} positions of dimension {d}, got {p.shape}")
    v, den, ok = VelocityField(law, psi).at(p.reshape(1, -1))
    if not ok[0]:
        raise NodeProximityError(
            f"velocity denominator {den[0]:.3e} below node floor at {p.tolist()}, t={psi.time}",
            position=p.copy(), time=psi.time)
    return v[0].reshape(n_moved, d)


def velocity_full(psi: SpinorWaveFunction, q) -> np.ndarray:
    """Velocities ``(N, d)`` of the conventional law at a labeled configuration."""
    return _single(FullLaw(), psi, q, psi.grid.num_particles)


def velocity_reduced(psi: SpinorWaveFunction, real_set: IndexSet, q_real) -> np.ndarray:
    """Velocities ``(#I, d)`` of the real particles, in label order."""
    law = ReducedLaw(real_set)
    return _single(law, psi, q_real, len(law.particles(psi.grid.num_particles)))


def velocity_symmetrized(psi: SpinorWaveFunction, q) -> np.ndarray:
    """Velocity of each slot of ``q`` (canonical order for an UnorderedConfig)."""
    if not isinstance(q, UnorderedConfig):
        p = as_positions(q)
        if p.shape[0] > 1:
            diff = p[:, None, :] - p[None, :, :]
            same = np.all(diff == 0, axis=-1)
            np.fill_diagonal(same, False)
            if same.any():
                raise CoincidenceError(f"coincident points in {p.tolist()}")
    return _single(SymmetrizedLaw(), psi, q, psi.grid.num_particles)
