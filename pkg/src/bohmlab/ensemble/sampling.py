"""Equilibrium sampling from grid densities."""
from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..wavefield.configs import canonical_order
from ..wavefield.grid import Grid


def sample_config(density: np.ndarray, n: int, rng: np.random.Generator, grid: Grid,
                  unordered: bool = False, points_dim: int | None = None) -> np.ndarray:
    """Draw ``n`` configurations from a nonnegative density on grid cells.

    A cell is chosen with probability proportional to its value, then the
    point is placed uniformly in the cell centred on that node (clipped to
    the box). Returns ``(n, D)`` for a density with ``D`` grid axes. With
    ``unordered`` the points of each draw (``points_dim`` coordinates per
    point) are put in canonical order.
    """
    rho = np.asarray(density, dtype=float)
    if rho.size == 0 or not np.all(np.isfinite(rho)):
        raise ValidationError("density must be finite and nonempty")
    scale = float(np.max(np.abs(rho)))
    if rho.min() < -1e-12 * max(scale, 1e-300):
        raise ValidationError(f"density has negative values (min {rho.min():.3e})")
    flat = np.clip(rho.reshape(-1), 0.0, None)
    cum = np.cumsum(flat)
    total = cum[-1]
    if not total > 0:
        raise ValidationError("density has zero mass")
    u = rng.random(n) * total
    cells = np.minimum(np.searchsorted(cum, u, side="right"), flat.size - 1)
    idx = np.stack(np.unravel_index(cells, rho.shape), axis=1) if rho.ndim else np.zeros((n, 0), int)
    jitter = rng.random(idx.shape) - 0.5
    x = grid.lo + (idx + jitter) * grid.dx
    x = np.clip(x, grid.lo, np.nextafter(grid.hi, grid.lo))
    if unordered:
        d = points_dim or grid.space_dim
        pts = x.reshape(n, -1, d)
        for r in range(n):
            pts[r] = pts[r][canonical_order(pts[r])]
        x = pts.reshape(n, -1)
    return x


def sort_points(x: np.ndarray, d: int = 1) -> np.ndarray:
    """Canonical (lexicographic) ordering of the points in each row."""
    n = x.shape[0]
    pts = np.array(x, dtype=float).reshape(n, -1, d)
    if d == 1:
        return np.sort(pts[..., 0], axis=1)
    for r in range(n):
        pts[r] = pts[r][canonical_order(pts[r])]
    return pts.reshape(n, -1)


def cell_index(x: np.ndarray, grid: Grid) -> np.ndarray:
    """Index of the centred cell containing each coordinate."""
    i = np.floor((np.asarray(x) - grid.lo) / grid.dx + 0.5).astype(np.int64)
    return np.clip(i, 0, grid.m - 1)
