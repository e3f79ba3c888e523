"""Region partition of configuration space and the projection onto real particles."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..errors import ValidationError
from ..wavefield.configs import IndexSet, LabeledConfig, as_positions
from ..wavefield.grid import Grid


@dataclass(frozen=True)
class Face:
    """A boundary point of R on one axis; ``normal`` points into R."""

    index: int
    axis: int
    position: float
    normal: int

    @property
    def name(self) -> str:
        side = "lo" if self.normal > 0 else "hi"
        return f"{side}{self.axis}" if self.axis else side


@dataclass(frozen=True)
class RegionPartition:
    """Particles inside the closed box region ``R = prod [lo_a, hi_a]`` are real.

    Bounds may be infinite; the partition does not depend on time.
    """

    bounds: Tuple[Tuple[float, float], ...]

    def __init__(self, bounds):
        b = np.asarray(bounds, dtype=float)
        if b.ndim == 1:
            b = b[None, :]
        if b.ndim != 2 or b.shape[1] != 2 or np.any(~(b[:, 0] < b[:, 1])):
            raise ValidationError(f"region: need lo < hi per axis, got {bounds!r}")
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in b))

    @classmethod
    def half_line(cls, a: float = 0.0, right: bool = True) -> "RegionPartition":
        return cls([(a, math.inf)] if right else [(-math.inf, a)])

    @classmethod
    def whole(cls, space_dim: int = 1) -> "RegionPartition":
        return cls([(-math.inf, math.inf)] * space_dim)

    @property
    def space_dim(self) -> int:
        return len(self.bounds)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of points with trailing axis of length ``d``."""
        p = np.asarray(points, dtype=float)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.all((p >= lo) & (p <= hi), axis=-1)

    def classify(self, q) -> IndexSet:
        p = as_positions(q)
        inside = self.contains(p)
        return IndexSet((i + 1 for i in range(p.shape[0]) if inside[i]), p.shape[0])

    def masks(self, x: np.ndarray) -> np.ndarray:
        """Bitmask of real particles for rows of ``x`` shaped ``(n, N, d)``."""
        inside = self.contains(x)
        return np.sum(inside.astype(np.int64) << np.arange(x.shape[1]), axis=1)

    def faces(self, grid: Grid) -> List[Face]:
        """Finite boundary points of R strictly inside the simulation box."""
        out = []
        for a, (lo, hi) in enumerate(self.bounds):
            if grid.lo < lo < grid.hi:
                out.append(Face(len(out), a, lo, +1))
            if grid.lo < hi < grid.hi:
                out.append(Face(len(out), a, hi, -1))
        return out

    def cell_fractions(self, grid: Grid, axis: int = 0) -> np.ndarray:
        """Fraction of each centred grid cell lying inside R along ``axis``."""
        lo, hi = self.bounds[axis]
        left = grid.x - grid.dx / 2
        right = grid.x + grid.dx / 2
        return np.clip(np.minimum(right, hi) - np.maximum(left, lo), 0.0, None) / grid.dx

    def for_grid(self, grid: Grid) -> "RegionPartition":
        if self.space_dim != grid.space_dim:
            raise ValidationError(f"region has {self.space_dim} axes, space has {grid.space_dim}")
        return self


@dataclass(frozen=True, eq=False)
class ProjectedState:
    """Real particle labels and their coordinates ``(#I, d)``."""

    real_set: IndexSet
    coords: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim == 1:
            c = c.reshape(len(self.real_set), -1) if len(self.real_set) else c.reshape(0, 1)
        if c.shape[0] != len(self.real_set):
            raise ValidationError(f"coords for {c.shape[0]} particles, real_set {self.real_set}")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    @property
    def mask(self) -> int:
        return self.real_set.mask


@dataclass(frozen=True, eq=False)
class JumpEvent:
    """A change of the real set.

    ``kind`` is ``"create"`` (an unreal particle appears on a face) or
    ``"annihilate"`` (a real particle leaves R through a face).
    """

    time: float
    source: ProjectedState
    destination: ProjectedState
    particle: int
    face: str
    kind: str


def project(q, partition: RegionPartition, dx: float = 1.0) -> ProjectedState:
    """Classify particles by membership in R and drop the unreal coordinates.

    Coordinates exactly on a face are nudged off it by ``5e-10 * dx``.
    """
    p = np.array(as_positions(q), dtype=float)
    t = q.time if isinstance(q, LabeledConfig) else 0.0
    for a, (lo, hi) in enumerate(partition.bounds):
        on = (p[:, a] == lo) | (p[:, a] == hi)
        if on.any():
            warnings.warn(f"configuration on the boundary of R (axis {a}); perturbing", stacklevel=2)
            p[on, a] += 0.5e-9 * dx
    rs = partition.classify(p)
    return ProjectedState(rs, p[list(rs.indices)], t)
