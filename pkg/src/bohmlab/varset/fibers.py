"""Sector densities, currents and boundary fluxes.

For a real set I the unreal coordinates are integrated over the part of
their axes outside R (the sector side), using spectral quadrature weights so
that the restricted integrals are exact for band-limited states. Fields are
returned on the grid of the real coordinates, real particles in label order.
"""
from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from ..errors import ValidationError
from ..wavefield import fields as wf
from ..wavefield.grid import Grid
from ..wavefield.interp import interpolate
from ..wavefield.state import SpinorWaveFunction
from .partition import Face, ProjectedState, RegionPartition


class SectorQuadrature:
    """Per-axis weight vectors for integrating inside and outside R."""

    def __init__(self, grid: Grid, partition: RegionPartition):
        partition.for_grid(grid)
        self.grid = grid
        self.partition = partition
        self.inside = [wf.interval_weights(grid, lo, hi) for lo, hi in partition.bounds]
        self.faces = partition.faces(grid)
        self.face_weights = [wf.point_weights(grid, f.position) for f in self.faces]

    def outside(self, field: np.ndarray, particle_axes: Tuple[int, ...]) -> np.ndarray:
        """Integrate one particle's axes over the complement of R (axes removed)."""
        g = self.grid
        full = np.sum(field, axis=particle_axes) * g.dx ** len(particle_axes)
        ins = field
        for c, ax in sorted(enumerate(particle_axes), key=lambda p: -p[1]):
            ins = wf.contract_axis(ins, self.inside[c], ax)
        return full - ins


def _contract_unreal(field, grid, quad, unreal, keep_axes_of=None):
    """Integrate the unreal particles (0-based) over their outside region."""
    d = grid.space_dim
    out = field
    for k in sorted(unreal, reverse=True):
        if keep_axes_of is not None and k == keep_axes_of:
            continue
        out = quad.outside(out, tuple(range(k * d, (k + 1) * d)))
    return out


def sector_channels(psi: SpinorWaveFunction, quad: SectorQuadrature, mask: int):
    """Channel stack for real set ``mask`` and the creation channel labels.

    Channel 0 is the sector density, then one current per real coordinate,
    then the signed inward flux of each (unreal particle, face) pair
    evaluated on that face (d = 1 only).
    """
    g = psi.grid
    n, d = g.num_particles, g.space_dim
    real = [i for i in range(n) if mask >> i & 1]
    unreal = [i for i in range(n) if not mask >> i & 1]
    rho = wf.density(psi)
    chans = [_contract_unreal(rho, g, quad, unreal)]
    for i in real:
        for c in range(d):
            chans.append(_contract_unreal(wf.microscopic_current(psi, i, c), g, quad, unreal))
    labels: List[Tuple[int, Face]] = []
    if d == 1:
        for k in unreal:
            jk = wf.microscopic_current(psi, k, 0)
            part = _contract_unreal(jk, g, quad, unreal, keep_axes_of=k)
            # axis of k after removing the unreal axes above it is unchanged
            for f, w in zip(quad.faces, quad.face_weights):
                chans.append(f.normal * wf.contract_axis(part, w, k - sum(u < k for u in unreal)))
                labels.append((k, f))
    return np.stack([np.asarray(c, dtype=float) for c in chans]), real, labels


def _state_fields(psi, partition, state: ProjectedState):
    g = psi.grid
    if state.real_set.n != g.num_particles:
        raise ValidationError("state and wavefunction disagree on particle count")
    quad = SectorQuadrature(g, partition)
    stack, real, labels = sector_channels(psi, quad, state.mask)
    sub = g.sub(len(real))
    pts = state.coords.reshape(1, -1)
    vals = interpolate(stack, pts, sub)[:, 0] if real else stack.reshape(-1)
    return vals, real, labels


def fiber_density(psi: SpinorWaveFunction, state: ProjectedState,
                  partition: RegionPartition) -> float:
    vals, _, _ = _state_fields(psi, partition, state)
    return float(vals[0])


def fiber_current(psi: SpinorWaveFunction, state: ProjectedState, label: int,
                  partition: RegionPartition) -> np.ndarray:
    """Sector current of real particle ``label`` (1-based) at the state, shape ``(d,)``."""
    if label not in state.real_set:
        raise ValidationError(f"particle {label} is not real in {state.real_set}")
    vals, real, _ = _state_fields(psi, partition, state)
    d = psi.grid.space_dim
    pos = real.index(label - 1)
    return vals[1 + pos * d: 1 + (pos + 1) * d].copy()


def jump_rate(psi: SpinorWaveFunction, state: ProjectedState, crossing,
              partition: RegionPartition) -> float:
    """Rate of the transition ``crossing = (label, face_index)`` from ``state``.

    For an unreal particle this is the creation rate: positive part of the
    inward boundary flux over the sector density. For a real particle the
    transition is deterministic: ``inf`` if it sits on the face moving out, else 0.
    """
    label, face_index = crossing
    g = psi.grid
    if g.space_dim != 1:
        raise ValidationError("jump rates are implemented for space_dim = 1")
    faces = partition.faces(g)
    if not 0 <= face_index < len(faces):
        raise ValidationError(f"unknown face {face_index}; region has {len(faces)} faces in the box")
    face = faces[face_index]
    vals, real, labels = _state_fields(psi, partition, state)
    if label in state.real_set:
        pos = real.index(label - 1)
        x = state.coords[pos, 0]
        v = vals[1 + pos] / vals[0]
        return float("inf") if x == face.position and v * face.normal < 0 else 0.0
    ch = labels.index((label - 1, face))
    flux = vals[1 + len(real) + ch]
    return max(flux, 0.0) / vals[0]


def sector_masses(psi: SpinorWaveFunction, partition: RegionPartition) -> Dict[int, float]:
    """Probability of each real set (keyed by bitmask)."""
    g = psi.grid
    quad = SectorQuadrature(g, partition)
    d = g.space_dim
    out = {}
    for mask in range(1 << g.num_particles):
        den = sector_channels_density(psi, quad, mask)
        real = [i for i in range(g.num_particles) if mask >> i & 1]
        val = den
        for pos in reversed(range(len(real))):
            for c in reversed(range(d)):
                val = wf.contract_axis(val, quad.inside[c], pos * d + c)
        out[mask] = float(val)
    return out


def sector_channels_density(psi, quad, mask):
    g = psi.grid
    unreal = [i for i in range(g.num_particles) if not mask >> i & 1]
    return _contract_unreal(wf.density(psi), g, quad, unreal)


def sector_cell_masses(psi: SpinorWaveFunction, partition: RegionPartition) -> Dict[int, np.ndarray]:
    """Cell masses of each sector density over the real coordinates inside R.

    Cells are centred on grid nodes; cells cut by a face get their inside fraction.
    """
    g = psi.grid
    quad = SectorQuadrature(g, partition)
    d = g.space_dim
    out = {}
    for mask in range(1 << g.num_particles):
        den = sector_channels_density(psi, quad, mask)
        nreal = bin(mask).count("1")
        m = den * g.dx ** (nreal * d)
        for pos in range(nreal):
            for c in range(d):
                ax = pos * d + c
                shp = [1] * (nreal * d)
                shp[ax] = g.m
                m = m * partition.cell_fractions(g, c).reshape(shp)
        out[mask] = np.clip(m, 0.0, None)
    return out
