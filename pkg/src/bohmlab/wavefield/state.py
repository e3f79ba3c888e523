"""Wavefunction container, potentials and initial-state recipes.

Recipes are plain dicts (the same shape as in JSON run configs)::

    {"kind": "gaussian", "packets": [{"center": [-2.0], "width": 1.0,
                                      "momentum": [1.0]}, ...]}
    {"kind": "plane_wave", "wavenumbers": [[k1], [k2]]}
    {"kind": "harmonic", "quanta": [[0], [1]], "stiffness": [1.0, 1.0]}
    {"kind": "superposition", "terms": [{"weight": 1.0, "state": {...}}, ...]}
    {"kind": "symmetrize" | "antisymmetrize", "state": {...}}

Any recipe may carry ``"spinor": [c_1, ..., c_l]`` (complex entries given as
numbers or ``[re, im]`` pairs); spatial factors default to spin component 0.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import eval_hermite

from ..errors import ResolutionError, ValidationError, ZeroStateError
from .grid import Grid, ModelParams


@dataclass(frozen=True, eq=False)
class SpinorWaveFunction:
    """Amplitudes of shape ``grid.shape + (spin_dim,)`` at a given time."""

    grid: Grid
    params: ModelParams
    amplitudes: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        a = self.amplitudes
        if not (isinstance(a, np.ndarray) and a.dtype == complex and not a.flags.writeable):
            a = np.array(a, dtype=complex)
            a.flags.writeable = False
        want = self.grid.shape + (self.params.spin_dim,)
        if a.shape != want:
            raise ValidationError(f"amplitudes: expected shape {want}, got {a.shape}")
        if self.params.num_particles != self.grid.num_particles:
            raise ValidationError("params and grid disagree on particle count")
        object.__setattr__(self, "amplitudes", a)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.cell_volume)

    def replace(self, amplitudes: np.ndarray, time: float) -> "SpinorWaveFunction":
        return SpinorWaveFunction(self.grid, self.params, amplitudes, time)

    def boundary_amplitude(self) -> float:
        """Largest |psi| on the outermost node layer of any axis."""
        a = np.abs(self.amplitudes)
        worst = 0.0
        for ax in range(self.grid.n_axes):
            worst = max(worst, float(a.take([0, -1], axis=ax).max()))
        return worst


@dataclass(frozen=True, eq=False)
class Potential:
    """Time-independent potential: zero, harmonic, sampled scalar or sampled matrix."""

    kind: str = "zero"
    stiffness: Optional[tuple] = None
    values: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def harmonic(cls, stiffness: Sequence[float]):
        return cls("harmonic", stiffness=tuple(float(s) for s in stiffness))

    @classmethod
    def scalar(cls, values):
        return cls("scalar", values=np.asarray(values, dtype=float))

    @classmethod
    def matrix(cls, values):
        v = np.asarray(values, dtype=complex)
        if v.ndim < 2 or v.shape[-1] != v.shape[-2]:
            raise ValidationError(f"matrix potential needs trailing (l, l), got {v.shape}")
        dev = np.max(np.abs(v - np.conj(np.swapaxes(v, -1, -2)))) if v.size else 0.0
        if dev > 1e-12:
            raise ValidationError(f"matrix potential not Hermitian (deviation {dev:.3e})")
        return cls("matrix", values=v)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def sample(self, grid: Grid, spin_dim: int = 1) -> np.ndarray:
        """Scalar ``grid.shape`` array, or ``grid.shape + (l, l)`` for matrices."""
        if self.kind == "zero":
            return np.zeros(grid.shape)
        if self.kind == "harmonic":
            if len(self.stiffness) != grid.num_particles:
                raise ValidationError("harmonic stiffness: one value per particle required")
            v = np.zeros(grid.shape)
            for i, s in enumerate(self.stiffness):
                for ax in grid.particle_axes(i):
                    v = v + 0.5 * s * grid.mesh(ax) ** 2
            return v
        if self.kind == "scalar":
            if self.values.shape != grid.shape:
                raise ValidationError(f"scalar potential shape {self.values.shape} != {grid.shape}")
            return self.values
        if self.kind == "matrix":
            if self.values.shape != grid.shape + (spin_dim, spin_dim):
                raise ValidationError("matrix potential shape does not match grid and spin_dim")
            return self.values
        raise ValidationError(f"unknown potential kind {self.kind!r}")


def permute_particles(arr: np.ndarray, sigma: Sequence[int], space_dim: int) -> np.ndarray:
    """Return ``arr o sigma`` on the grid, ``(f o sigma)(q) = f(sigma q)``.

    ``sigma[j]`` is the 0-based image of particle ``j``; ``sigma q`` moves
    ``q_j`` to slot ``sigma[j]``. Axes after the ``N*d`` grid axes are kept.
    """
    n = len(sigma)
    axes = [a for k in range(n) for a in range(sigma[k] * space_dim, (sigma[k] + 1) * space_dim)]
    axes += list(range(n * space_dim, arr.ndim))
    return np.transpose(arr, axes)


def permutation_sign(sigma: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(sigma)
    for i in range(len(sigma)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = sigma[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _complex(c) -> complex:
    if isinstance(c, (list, tuple)):
        return complex(float(c[0]), float(c[1]))
    return complex(c)


def _vec(v, d, what):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.shape == (1,) and d > 1:
        arr = np.full(d, arr[0])
    if arr.shape != (d,):
        raise ValidationError(f"{what}: expected {d} components, got {arr.tolist()}")
    return arr


def _per_particle(recipe, key, grid):
    items = recipe.get(key)
    if items is None or len(items) != grid.num_particles:
        raise ValidationError(f"{recipe.get('kind')}.{key}: one entry per particle required")
    return items


def _gaussian_1d(x, c, sigma, k):
    return np.exp(-((x - c) ** 2) / (4.0 * sigma**2) + 1j * k * x)


class _Builder:
    def __init__(self, grid: Grid, params: ModelParams, resolution: str):
        self.grid = grid
        self.params = params
        self.resolution = resolution

    def spatial_product(self, factors):
        """Outer product of per-axis 1-D arrays (ordered like grid axes)."""
        out = np.ones((), dtype=complex)
        for f in factors:
            out = np.multiply.outer(out, f)
        return out

    def with_spinor(self, spatial, recipe):
        ell = self.params.spin_dim
        chi = np.zeros(ell, dtype=complex)
        if "spinor" in recipe:
            raw = recipe["spinor"]
            if len(raw) != ell:
                raise ValidationError(f"spinor: expected {ell} components")
            chi[:] = [_complex(c) for c in raw]
            nrm = np.linalg.norm(chi)
            if nrm == 0:
                raise ZeroStateError("spinor: zero vector")
            chi /= nrm
        else:
            chi[0] = 1.0
        return spatial[..., None] * chi

    def check_inside(self, c, what):
        g = self.grid
        if np.any((c < g.lo) | (c >= g.hi)):
            raise ValidationError(f"{what}: {c.tolist()} outside box [{g.lo}, {g.hi})")

    def normalized(self, amp, what):
        n2 = float(np.sum(np.abs(amp) ** 2) * self.grid.cell_volume)
        if not n2 > 1e-300 or not np.isfinite(n2):
            raise ZeroStateError(f"{what}: recipe produced the zero state")
        return amp / math.sqrt(n2), n2

    def build(self, recipe) -> np.ndarray:
        if not isinstance(recipe, dict) or "kind" not in recipe:
            raise ValidationError(f"state recipe must be a dict with 'kind', got {recipe!r}")
        kind = recipe["kind"]
        meth = getattr(self, "_" + kind, None)
        if meth is None:
            raise ValidationError(f"unknown state kind {kind!r}")
        amp = meth(recipe)
        return self.normalized(amp, kind)[0]

    def _gaussian(self, r):
        g, d = self.grid, self.grid.space_dim
        factors = []
        for i, pk in enumerate(_per_particle(r, "packets", g)):
            c = _vec(pk["center"], d, f"packets[{i}].center")
            self.check_inside(c, f"packets[{i}].center")
            sigma = float(pk.get("width", 1.0))
            if not sigma > 0:
                raise ValidationError(f"packets[{i}].width must be positive")
            if sigma < 3 * g.dx:
                msg = f"packets[{i}].width {sigma} < 3 dx = {3 * g.dx}"
                if self.resolution == "error":
                    raise ResolutionError(msg)
                warnings.warn(msg, stacklevel=3)
            k = _vec(pk.get("momentum", 0.0), d, f"packets[{i}].momentum")
            factors += [_gaussian_1d(g.x, c[a], sigma, k[a]) for a in range(d)]
        return self.with_spinor(self.spatial_product(factors), r)

    def _plane_wave(self, r):
        g, d = self.grid, self.grid.space_dim
        factors = []
        for i, kv in enumerate(_per_particle(r, "wavenumbers", g)):
            k = _vec(kv, d, f"wavenumbers[{i}]")
            n = k * g.length / (2 * np.pi)
            if np.any(np.abs(n - np.rint(n)) > 1e-9):
                raise ValidationError(f"wavenumbers[{i}]: {k.tolist()} not on the reciprocal lattice")
            # phase referenced to the box origin so the lattice mode is exact
            factors += [np.exp(1j * k[a] * (g.x - g.lo)) for a in range(d)]
        return self.with_spinor(self.spatial_product(factors), r)

    def _harmonic(self, r):
        g, p, d = self.grid, self.params, self.grid.space_dim
        stiff = _per_particle(r, "stiffness", g)
        factors = []
        for i, nq in enumerate(_per_particle(r, "quanta", g)):
            nq = np.atleast_1d(nq).astype(int)
            if nq.shape == (1,) and d > 1:
                nq = np.full(d, nq[0])
            omega = math.sqrt(float(stiff[i]) / p.masses[i])
            a = math.sqrt(p.masses[i] * omega / p.hbar)
            for ax in range(d):
                n = int(nq[ax])
                xi = a * g.x
                factors.append(eval_hermite(n, xi) * np.exp(-xi**2 / 2) + 0j)
        return self.with_spinor(self.spatial_product(factors), r)

    def _superposition(self, r):
        terms = r.get("terms")
        if not terms:
            raise ValidationError("superposition.terms: at least one term required")
        out = 0
        for t in terms:
            out = out + _complex(t.get("weight", 1.0)) * self.build(t["state"])
        return out

    def _sym(self, r, signed):
        inner = self.build(r["state"])
        n, d = self.grid.num_particles, self.grid.space_dim
        out = np.zeros_like(inner)
        for sigma in itertools.permutations(range(n)):
            s = permutation_sign(sigma) if signed else 1
            out = out + s * permute_particles(inner, sigma, d)
        what = "antisymmetrize" if signed else "symmetrize"
        n2 = float(np.sum(np.abs(out) ** 2) * self.grid.cell_volume)
        if n2 < 1e-20:
            raise ZeroStateError(f"{what}: state vanishes (e.g. identical factors)")
        return out

    def _symmetrize(self, r):
        return self._sym(r, signed=False)

    def _antisymmetrize(self, r):
        return self._sym(r, signed=True)


def init_state(recipe: dict, grid: Grid, params: ModelParams, *,
               resolution: str = "error") -> SpinorWaveFunction:
    """Build a normalised state at time 0 from a recipe dict.

    ``resolution`` chooses what happens to packets narrower than three
    cells: ``"error"`` raises :class:`ResolutionError`, ``"warn"`` warns.
    """
    if params.num_particles != grid.num_particles:
        raise ValidationError("params and grid disagree on particle count")
    amp = _Builder(grid, params, resolution).build(recipe)
    return SpinorWaveFunction(grid, params, amp, 0.0)
