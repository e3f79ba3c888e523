"""Multilinear interpolation of periodic grid fields at particle positions."""
from __future__ import annotations

import numpy as np

from ..errors import OutOfDomainError
from .configs import as_positions
from .grid import Grid

_SNAP = 1e-12  # cell units


def cell_coordinates(points: np.ndarray, lo: float, dx: float, m: int):
    """Lower node index and fractional offset per coordinate."""
    u = (points - lo) / dx
    r = np.rint(u)
    u = np.where(np.abs(u - r) < _SNAP, r, u)
    i0 = np.floor(u).astype(np.int64)
    frac = u - i0
    np.clip(i0, 0, m - 1, out=i0)
    return i0, frac


def interpolate(values: np.ndarray, points: np.ndarray, grid: Grid,
                check: bool = True) -> np.ndarray:
    """Interpolate fields whose trailing ``D`` axes are grid axes.

    ``values`` has shape ``lead + (M,)*D`` and ``points`` shape ``(n, D)``;
    returns ``lead + (n,)``. Upper neighbours wrap periodically, but points
    themselves must lie in ``[x_min, x_max)``. Corner contributions are
    accumulated one at a time so each row's result is independent of batch size.
    """
    pts = np.asarray(points, dtype=float)
    n, dim = pts.shape
    lead = values.shape[: values.ndim - dim]
    if dim == 0:
        return np.broadcast_to(values[..., None], lead + (n,)).copy()
    if check:
        bad = ~np.all((pts >= grid.lo) & (pts < grid.hi), axis=1)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            raise OutOfDomainError(f"point {pts[j].tolist()} outside box [{grid.lo}, {grid.hi})",
                                   position=pts[j].copy())
    m = grid.m
    i0, frac = cell_coordinates(pts, grid.lo, grid.dx, m)
    i1 = (i0 + 1) % m
    flat = values.reshape(lead + (-1,))
    strides = m ** np.arange(dim - 1, -1, -1)
    out = np.zeros(lead + (n,), dtype=np.result_type(values.dtype, float))
    for corner in range(1 << dim):
        w = np.ones(n)
        idx = np.zeros(n, dtype=np.int64)
        for a in range(dim):
            if corner >> (dim - 1 - a) & 1:
                w = w * frac[:, a]
                idx = idx + i1[:, a] * strides[a]
            else:
                w = w * (1.0 - frac[:, a])
                idx = idx + i0[:, a] * strides[a]
        out = out + w * np.take(flat, idx, axis=-1)
    return out


def eval_field(field: np.ndarray, point, grid: Grid):
    """Value of a grid field at one configuration (trailing axes are grid axes)."""
    p = as_positions(point).reshape(1, -1)
    v = interpolate(np.asarray(field), p, grid)[..., 0]
    return v.item() if v.ndim == 0 else v
