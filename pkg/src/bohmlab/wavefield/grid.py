"""Model constants and the periodic configuration-space grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ..errors import ResourceError, ValidationError

DEFAULT_MEMORY_BUDGET = 2**24  # grid cells


@dataclass(frozen=True)
class ModelParams:
    """Action scale, particle masses and number of internal components."""

    masses: Tuple[float, ...]
    hbar: float = 1.0
    spin_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if not self.masses:
            raise ValidationError("masses: at least one particle required")
        if any(not m > 0 for m in self.masses):
            raise ValidationError(f"masses: must be positive, got {self.masses}")
        if not self.hbar > 0:
            raise ValidationError(f"hbar: must be positive, got {self.hbar}")
        if int(self.spin_dim) != self.spin_dim or self.spin_dim < 1:
            raise ValidationError(f"spin_dim: must be an integer >= 1, got {self.spin_dim}")

    @classmethod
    def equal(cls, n: int, mass: float = 1.0, **kw) -> "ModelParams":
        return cls(masses=(mass,) * n, **kw)

    @property
    def num_particles(self) -> int:
        return len(self.masses)


@dataclass(frozen=True)
class GridSpec:
    num_particles: int
    space_dim: int
    box: Tuple[float, float]
    points_per_axis: int
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "box", (float(self.box[0]), float(self.box[1])))


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid over ``box^(N*d)``.

    Axes are ordered particle-major: axis ``i*d + c`` is component ``c`` of
    particle ``i`` (0-based). Grid nodes sit at ``x_min + j*dx``.
    """

    spec: GridSpec
    x: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)

    @property
    def num_particles(self) -> int:
        return self.spec.num_particles

    @property
    def space_dim(self) -> int:
        return self.spec.space_dim

    @property
    def m(self) -> int:
        return self.spec.points_per_axis

    @property
    def lo(self) -> float:
        return self.spec.box[0]

    @property
    def hi(self) -> float:
        return self.spec.box[1]

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def dx(self) -> float:
        return self.length / self.m

    @property
    def n_axes(self) -> int:
        return self.num_particles * self.space_dim

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.m,) * self.n_axes

    @property
    def size(self) -> int:
        return self.m**self.n_axes

    @property
    def cell_volume(self) -> float:
        return self.dx**self.n_axes

    def particle_axes(self, i: int) -> Tuple[int, ...]:
        d = self.space_dim
        return tuple(range(i * d, (i + 1) * d))

    def axes_of(self, particles: Sequence[int]) -> Tuple[int, ...]:
        return tuple(a for i in particles for a in self.particle_axes(i))

    def mesh(self, axis: int) -> np.ndarray:
        """Coordinate of ``axis`` broadcast to the full grid shape."""
        shp = [1] * self.n_axes
        shp[axis] = self.m
        return self.x.reshape(shp)

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return (p >= self.lo) & (p < self.hi)

    def sub(self, num_particles: int) -> "Grid":
        """Same axis discretisation for a different particle count."""
        spec = GridSpec(num_particles, self.space_dim, self.spec.box,
                        self.m, self.spec.memory_budget)
        return Grid(spec, self.x, self.k)


def build_grid(spec: GridSpec, params: ModelParams | None = None) -> Grid:
    m = spec.points_per_axis
    if int(m) != m or m < 2 or (m & (m - 1)) != 0:
        raise ValidationError(f"points_per_axis: must be a power of two, got {m}")
    if spec.num_particles < 1 or spec.space_dim < 1:
        raise ValidationError("num_particles and space_dim must be >= 1")
    lo, hi = spec.box
    if not hi > lo:
        raise ValidationError(f"box: need x_min < x_max, got {spec.box}")
    if params is not None and params.num_particles != spec.num_particles:
        raise ValidationError(
            f"masses: {params.num_particles} given for {spec.num_particles} particles")
    cells = m ** (spec.num_particles * spec.space_dim)
    spin = params.spin_dim if params is not None else 1
    if cells * spin > spec.memory_budget:
        raise ResourceError(
            f"grid of {cells} cells x {spin} components exceeds budget {spec.memory_budget}")
    dx = (hi - lo) / m
    x = lo + dx * np.arange(m)
    k = 2.0 * np.pi * np.fft.fftfreq(m, d=dx)
    return Grid(spec, x, k)
