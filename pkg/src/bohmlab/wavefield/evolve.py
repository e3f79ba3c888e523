"""Strang-split spectral propagation of the Schroedinger equation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..errors import ValidationError
from .grid import Grid, ModelParams
from .state import Potential, SpinorWaveFunction


def kinetic_symbol(grid: Grid, params: ModelParams) -> np.ndarray:
    """Kinetic energy ``sum_i hbar^2 |k_i|^2 / 2 m_i`` over the FFT lattice, divided by hbar."""
    out = np.zeros(grid.shape)
    for i, m in enumerate(params.masses):
        for ax in grid.particle_axes(i):
            shp = [1] * grid.n_axes
            shp[ax] = grid.m
            out = out + (params.hbar / (2.0 * m)) * grid.k.reshape(shp) ** 2
    return out


class Propagator:
    """One Strang step: half potential, full kinetic in Fourier space, half potential.

    Matrix potentials use a per-cell eigendecomposition to build the exact
    half-step unitary.
    """

    def __init__(self, grid: Grid, params: ModelParams, dt: float,
                 potential: Optional[Potential] = None):
        if not dt > 0:
            raise ValidationError(f"dt must be positive, got {dt}")
        self.grid, self.params, self.dt = grid, params, float(dt)
        self.potential = potential or Potential.zero()
        kin = kinetic_symbol(grid, params)
        worst = float(kin.max()) * dt
        if worst >= math.pi:
            raise ValidationError(
                f"time step too coarse for the lattice: max kinetic phase {worst:.3f} >= pi")
        self._kin = np.exp(-1j * kin * dt)[..., None]
        self._axes = tuple(range(grid.n_axes))
        hb = params.hbar
        self._vhalf = None
        self._uhalf = None
        if not self.potential.is_zero:
            v = self.potential.sample(grid, params.spin_dim)
            if self.potential.kind == "matrix":
                lam, vec = np.linalg.eigh(v)
                ph = np.exp(-0.5j * dt * lam / hb)
                self._uhalf = np.einsum("...ab,...b,...cb->...ac", vec, ph, vec.conj())
            else:
                self._vhalf = np.exp(-0.5j * dt * v / hb)[..., None]

    def _half_potential(self, a):
        if self._vhalf is not None:
            return a * self._vhalf
        if self._uhalf is not None:
            return np.einsum("...ab,...b->...a", self._uhalf, a)
        return a

    def step(self, a: np.ndarray, n_steps: int = 1) -> np.ndarray:
        for _ in range(n_steps):
            a = self._half_potential(a)
            a = np.fft.ifftn(np.fft.fftn(a, axes=self._axes) * self._kin, axes=self._axes)
            a = self._half_potential(a)
        return a


def evolve(psi: SpinorWaveFunction, dt: float, n_steps: int,
           potential: Optional[Potential] = None) -> SpinorWaveFunction:
    """Advance ``psi`` by ``n_steps * dt``; returns a new snapshot."""
    if n_steps < 0 or int(n_steps) != n_steps:
        raise ValidationError(f"n_steps must be a non-negative integer, got {n_steps}")
    prop = Propagator(psi.grid, psi.params, dt, potential)
    a = prop.step(np.array(psi.amplitudes), int(n_steps))
    return psi.replace(a, psi.time + n_steps * dt)


@dataclass(frozen=True, eq=False)
class SnapshotSeries:
    """Immutable snapshots on a uniform time stride, starting at ``t0``."""

    snapshots: tuple
    stride: float

    @property
    def t0(self) -> float:
        return self.snapshots[0].time

    @property
    def t_end(self) -> float:
        return self.snapshots[-1].time

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    @property
    def params(self) -> ModelParams:
        return self.snapshots[0].params

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i) -> SpinorWaveFunction:
        return self.snapshots[i]

    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        """Index of the snapshot at time ``t`` (must lie on the stride)."""
        j = (t - self.t0) / self.stride
        r = int(round(j))
        if abs(j - r) > tol or not 0 <= r < len(self.snapshots):
            raise ValidationError(f"t={t} is not a snapshot time")
        return r


def evolve_series(psi0: SpinorWaveFunction, t_end: float, stride: float,
                  dt: Optional[float] = None,
                  potential: Optional[Potential] = None) -> SnapshotSeries:
    """Snapshots of ``psi0`` every ``stride`` up to ``t_end`` (inclusive).

    ``dt`` must divide ``stride``; it defaults to ``stride``.
    """
    if not stride > 0:
        raise ValidationError("stride must be positive")
    dt = stride if dt is None else float(dt)
    sub = stride / dt
    n_sub = int(round(sub))
    if n_sub < 1 or abs(sub - n_sub) > 1e-9:
        raise ValidationError(f"dt={dt} does not divide stride={stride}")
    n_snap = int(round((t_end - psi0.time) / stride))
    if n_snap < 0 or abs(psi0.time + n_snap * stride - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValidationError(f"t_end={t_end} is not a multiple of stride={stride}")
    prop = Propagator(psi0.grid, psi0.params, dt, potential)
    snaps: List[SpinorWaveFunction] = [psi0]
    a = np.array(psi0.amplitudes)
    for j in range(1, n_snap + 1):
        a = prop.step(a, n_sub)
        snaps.append(psi0.replace(a, psi0.time + j * stride))
    return SnapshotSeries(tuple(snaps), float(stride))
