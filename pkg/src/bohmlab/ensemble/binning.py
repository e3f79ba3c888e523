"""Equal-mass bins built from a reference density on grid cells.

Bins are unions of grid cells (k-d style: slabs along the first axis, then
slabs of each slab along the next axis, ...), so a sample's bin follows from
the cell that contains it.
"""
from __future__ import annotations

import math
from typing import Dict, List

import numpy as np

from ..errors import ValidationError
from ..wavefield.grid import Grid
from .sampling import cell_index


def _split_counts(n_bins: int, dim: int) -> List[int]:
    """Per-axis slab counts whose product is at most ``n_bins``."""
    if dim == 0:
        return []
    base = max(1, int(math.floor(n_bins ** (1.0 / dim) + 1e-9)))
    counts = [base] * dim
    for a in range(dim):
        while math.prod(counts[:a] + [counts[a] + 1] + counts[a + 1:]) <= n_bins:
            counts[a] += 1
    return counts


def _equal_mass_cuts(weights: np.ndarray, k: int) -> np.ndarray:
    """Slice boundaries (cell indices) splitting 1-D ``weights`` into ``k`` parts."""
    cum = np.cumsum(weights)
    total = cum[-1]
    if total <= 0 or k <= 1:
        return np.array([0, weights.size])
    targets = total * np.arange(1, k) / k
    inner = np.searchsorted(cum, targets, side="left") + 1
    return np.unique(np.concatenate([[0], np.clip(inner, 1, weights.size - 1), [weights.size]]))


class AdaptiveBins:
    """At most ``n_bins`` equal-mass bins over a ``D``-dimensional cell-mass array."""

    def __init__(self, cell_mass: np.ndarray, n_bins: int):
        mass = np.clip(np.asarray(cell_mass, dtype=float), 0.0, None)
        self.dim = mass.ndim
        self.shape = mass.shape
        if self.dim == 0:
            self.labels = np.zeros((), dtype=np.int64)
            self.masses = np.array([float(mass)])
            return
        counts = _split_counts(max(1, n_bins), self.dim)
        labels = np.zeros(mass.shape, dtype=np.int64)
        next_label = [0]

        def split(region, axis):
            sub = mass[region]
            if axis == self.dim:
                labels[region] = next_label[0]
                next_label[0] += 1
                return
            other = tuple(a for a in range(self.dim) if a != axis)
            marginal = sub.sum(axis=other) if other else sub
            cuts = _equal_mass_cuts(marginal, counts[axis])
            start = region[axis].start or 0
            for c0, c1 in zip(cuts[:-1], cuts[1:]):
                r = list(region)
                r[axis] = slice(start + c0, start + c1)
                split(tuple(r), axis + 1)

        split(tuple(slice(0, s) for s in mass.shape), 0)
        self.labels = labels
        self.masses = np.bincount(labels.ravel(), weights=mass.ravel(), minlength=next_label[0])

    @property
    def n_bins(self) -> int:
        return self.masses.size

    def assign_cells(self, cells: np.ndarray) -> np.ndarray:
        """Bin of each row of cell indices ``(n, D)``."""
        if self.dim == 0:
            return np.zeros(cells.shape[0], dtype=np.int64)
        return self.labels[tuple(cells.T)]

    def counts(self, x: np.ndarray, grid: Grid) -> np.ndarray:
        """Histogram of coordinates ``(n, D)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] == 0:
            return np.zeros(self.n_bins)
        return np.bincount(self.assign_cells(cell_index(x, grid)), minlength=self.n_bins).astype(float)


class SectorBins:
    """Bins over the disjoint union of sectors keyed by real-set bitmask.

    Bins are shared between sectors in proportion to sector mass (at least
    one bin for every sector with mass).
    """

    def __init__(self, cell_masses: Dict[int, np.ndarray], n_bins: int):
        totals = {m: float(np.sum(v)) for m, v in cell_masses.items()}
        grand = sum(totals.values())
        if not grand > 0:
            raise ValidationError("sector masses sum to zero")
        self.bins: Dict[int, AdaptiveBins] = {}
        self.offset: Dict[int, int] = {}
        off = 0
        for m in sorted(cell_masses):
            if totals[m] <= 0:
                continue
            k = max(1, int(round(n_bins * totals[m] / grand)))
            b = AdaptiveBins(cell_masses[m], k)
            self.bins[m] = b
            self.offset[m] = off
            off += b.n_bins
        self.n_bins = off
        self.masses = np.concatenate([self.bins[m].masses for m in sorted(self.bins)])

    def counts(self, masks: np.ndarray, x: np.ndarray, grid: Grid) -> np.ndarray:
        """Histogram of sector states; ``x`` is ``(n, N)`` with NaN for unreal particles."""
        out = np.zeros(self.n_bins)
        masks = np.asarray(masks)
        for m in np.unique(masks):
            m = int(m)
            rows = masks == m
            if m not in self.bins:
                raise ValidationError(f"sample in sector {m} with no reference mass")
            real = [i for i in range(x.shape[1]) if m >> i & 1]
            c = self.bins[m].counts(x[rows][:, real], grid)
            out[self.offset[m]: self.offset[m] + c.size] += c
        return out

    def split(self, vec: np.ndarray) -> Dict[int, np.ndarray]:
        return {m: vec[self.offset[m]: self.offset[m] + b.n_bins] for m, b in self.bins.items()}


def wedge_cell_masses(density: np.ndarray, grid: Grid, n: int) -> np.ndarray:
    """Cell masses of a symmetric ``n``-point density restricted to ``x_1 <= ... <= x_n`` (d = 1).

    Off-wedge cells get zero; a cell with a run of ``r`` equal indices keeps
    the ``1/r!`` share of its volume that lies in the wedge.
    """
    if grid.space_dim != 1:
        raise ValidationError("sorted-coordinate binning is implemented for d = 1")
    rho = np.asarray(density, dtype=float)
    if rho.ndim != n:
        raise ValidationError("density rank must equal the number of points")
    m = grid.m
    idx = [np.arange(m).reshape([m if a == k else 1 for a in range(n)]) for k in range(n)]
    weight = np.ones(rho.shape)
    run = np.ones(rho.shape)
    for k in range(1, n):
        tie = idx[k] == idx[k - 1]
        weight = weight * (idx[k] >= idx[k - 1])
        run = np.where(tie, run + 1, 1.0)
        weight = weight / run
    return np.clip(rho, 0.0, None) * grid.dx ** n * weight
