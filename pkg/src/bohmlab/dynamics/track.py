"""Grid fields on a snapshot stride, sampled at (time, position) pairs."""
from __future__ import annotations

import numpy as np

from ..wavefield.grid import Grid
from ..wavefield.interp import cell_coordinates

_WSNAP = 1e-9


class FieldTrack:
    """Stack of ``C`` channels on ``D`` grid axes over ``K`` snapshot times.

    ``stack`` has shape ``(K, C) + (M,)*D``. Sampling is multilinear in space
    and linear in time; each row is sampled independently of the others.
    """

    def __init__(self, stack: np.ndarray, grid: Grid, dim: int, t0: float, stride: float):
        self.stack = np.ascontiguousarray(stack, dtype=float)
        self.grid = grid
        self.dim = dim
        self.t0 = float(t0)
        self.stride = float(stride)
        self.n_snap, self.n_channels = self.stack.shape[:2]
        self._flat = self.stack.reshape(self.n_snap, self.n_channels, -1)

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n_snap - 1) * self.stride

    def inside(self, x: np.ndarray) -> np.ndarray:
        g = self.grid
        return np.all((x >= g.lo) & (x < g.hi), axis=1)

    def _time_index(self, t):
        if self.n_snap == 1:
            z = np.zeros(np.shape(t), dtype=np.int64)
            return z, np.zeros(np.shape(t))
        kf = (np.asarray(t, dtype=float) - self.t0) / self.stride
        k = np.floor(kf + _WSNAP).astype(np.int64)
        np.clip(k, 0, self.n_snap - 2, out=k)
        w = kf - k
        w = np.where(np.abs(w) < _WSNAP, 0.0, np.where(np.abs(w - 1) < _WSNAP, 1.0, w))
        return k, w

    def sample(self, t, x: np.ndarray) -> np.ndarray:
        """Channels at rows ``(t[r], x[r])``; returns ``(n, C)``. ``x`` must be in the box."""
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        t = np.broadcast_to(np.asarray(t, dtype=float), (n,))
        k, w = self._time_index(t)
        k1 = np.minimum(k + 1, self.n_snap - 1)
        fl = self._flat
        if self.dim == 0:
            a = fl[k, :, 0]
            b = fl[k1, :, 0]
            return (1.0 - w)[:, None] * a + w[:, None] * b
        g = self.grid
        m = g.m
        i0, frac = cell_coordinates(x, g.lo, g.dx, m)
        i1 = (i0 + 1) % m
        strides = m ** np.arange(self.dim - 1, -1, -1)
        acc_a = np.zeros((n, self.n_channels))
        acc_b = np.zeros((n, self.n_channels))
        for corner in range(1 << self.dim):
            wt = np.ones(n)
            idx = np.zeros(n, dtype=np.int64)
            for a in range(self.dim):
                if corner >> (self.dim - 1 - a) & 1:
                    wt = wt * frac[:, a]
                    idx = idx + i1[:, a] * strides[a]
                else:
                    wt = wt * (1.0 - frac[:, a])
                    idx = idx + i0[:, a] * strides[a]
            acc_a = acc_a + wt[:, None] * fl[k, :, idx]
            acc_b = acc_b + wt[:, None] * fl[k1, :, idx]
        return (1.0 - w)[:, None] * acc_a + w[:, None] * acc_b
