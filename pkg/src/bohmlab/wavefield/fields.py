"""Densities, currents and partial contractions of a wavefunction."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ResourceError, ValidationError
from .configs import IndexSet
from .grid import Grid
from .state import SpinorWaveFunction, permute_particles

MAX_PERMUTATION_PARTICLES = 5


@dataclass(frozen=True, eq=False)
class FieldBundle:
    """``rho`` on the grid and ``currents`` of shape ``(N, d) + grid.shape``."""

    rho: np.ndarray
    currents: np.ndarray

    def current(self, i: int, component: int = 0) -> np.ndarray:
        return self.currents[i, component]


def spectral_derivative(a: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """d/dx along a grid axis; the unpaired Nyquist mode is dropped."""
    k = 1j * grid.k.copy()
    if grid.m % 2 == 0:
        k[grid.m // 2] = 0.0
    shp = [1] * a.ndim
    shp[axis] = grid.m
    return np.fft.ifft(np.fft.fft(a, axis=axis) * k.reshape(shp), axis=axis)


def density(psi: SpinorWaveFunction) -> np.ndarray:
    return np.sum(np.abs(psi.amplitudes) ** 2, axis=-1)


def microscopic_current(psi: SpinorWaveFunction, i: int, component: int = 0) -> np.ndarray:
    """``(hbar/m_i) Im psi^* d_{i,c} psi`` with spin contracted (0-based ``i``)."""
    g = psi.grid
    ax = g.particle_axes(i)[component]
    dpsi = spectral_derivative(psi.amplitudes, g, ax)
    return (psi.params.hbar / psi.params.masses[i]) * np.sum(
        np.imag(np.conj(psi.amplitudes) * dpsi), axis=-1)


def density_current(psi: SpinorWaveFunction) -> FieldBundle:
    g = psi.grid
    cur = np.empty((g.num_particles, g.space_dim) + g.shape)
    for i in range(g.num_particles):
        for c in range(g.space_dim):
            cur[i, c] = microscopic_current(psi, i, c)
    return FieldBundle(density(psi), cur)


def _check_real_set(real_set: IndexSet, n: int) -> None:
    if real_set.n != n:
        raise ValidationError(f"real_set is over {real_set.n} labels, state has {n} particles")
    if len(real_set) == 0:
        raise ValidationError("real_set must be nonempty")


def marginalize(field: np.ndarray, grid: Grid, real_set: IndexSet) -> np.ndarray:
    """Riemann cell-sum of a grid field over the coordinates outside ``real_set``."""
    unreal = grid.axes_of(real_set.complement().indices)
    if not unreal:
        return field
    return np.sum(field, axis=unreal) * grid.dx ** len(unreal)


def partial_inner_product(phi: SpinorWaveFunction, psi: SpinorWaveFunction,
                          real_set: IndexSet) -> np.ndarray:
    """``<phi, psi>`` over the unreal coordinates; a function of the real ones.

    The result has one axis per real coordinate, real particles in label order.
    """
    if phi.grid.shape != psi.grid.shape or phi.params.spin_dim != psi.params.spin_dim:
        raise ValidationError("phi and psi live on different grids")
    _check_real_set(real_set, psi.grid.num_particles)
    local = np.sum(np.conj(phi.amplitudes) * psi.amplitudes, axis=-1)
    return marginalize(local, psi.grid, real_set)


def reduced_density(psi: SpinorWaveFunction, real_set: IndexSet) -> np.ndarray:
    _check_real_set(real_set, psi.grid.num_particles)
    return marginalize(density(psi), psi.grid, real_set)


def reduced_current(psi: SpinorWaveFunction, real_set: IndexSet, i: int,
                    component: int = 0) -> np.ndarray:
    """``(hbar/m_i) Im <psi, d_i psi>`` over the unreal coordinates (0-based ``i``)."""
    _check_real_set(real_set, psi.grid.num_particles)
    if i + 1 not in real_set:
        raise ValidationError(f"particle {i + 1} is not in real_set {real_set}")
    return marginalize(microscopic_current(psi, i, component), psi.grid, real_set)


def check_permutation_budget(n: int) -> None:
    if n > MAX_PERMUTATION_PARTICLES:
        raise ResourceError(f"{n}! permutation terms exceed the budget "
                            f"(N <= {MAX_PERMUTATION_PARTICLES})")


@dataclass(frozen=True, eq=False)
class SymmetrizedDensity:
    """Permutation sum of rho and the same divided by ``N!`` (a probability density)."""

    values: np.ndarray
    normalized: np.ndarray


def symmetrize_field(field: np.ndarray, n: int, space_dim: int) -> np.ndarray:
    out = np.zeros_like(field)
    for sigma in itertools.permutations(range(n)):
        out = out + permute_particles(field, sigma, space_dim)
    return out


def symmetrized_density(psi: SpinorWaveFunction) -> SymmetrizedDensity:
    g = psi.grid
    check_permutation_budget(g.num_particles)
    vals = symmetrize_field(density(psi), g.num_particles, g.space_dim)
    return SymmetrizedDensity(vals, vals / math.factorial(g.num_particles))


def symmetrized_currents(psi: SpinorWaveFunction, bundle: Optional[FieldBundle] = None) -> np.ndarray:
    """Slot currents ``sum_sigma j_{sigma(i)} o sigma``, shape ``(N, d) + grid.shape``."""
    g = psi.grid
    n, d = g.num_particles, g.space_dim
    check_permutation_budget(n)
    bundle = bundle or density_current(psi)
    out = np.zeros_like(bundle.currents)
    for sigma in itertools.permutations(range(n)):
        for i in range(n):
            for c in range(d):
                out[i, c] += permute_particles(bundle.currents[sigma[i], c], sigma, d)
    return out


# --- spectral quadrature functionals on one axis -------------------------

def _mode_factors(grid: Grid):
    """Wavenumbers and weights for the real trigonometric interpolant."""
    k = grid.k.copy()
    w = np.ones(grid.m)
    if grid.m % 2 == 0:
        # Nyquist mode split evenly between +k and -k
        k[grid.m // 2] = abs(k[grid.m // 2])
    return k, w


def interval_weights(grid: Grid, a: float, b: float) -> np.ndarray:
    """Weights ``w`` with ``sum_j w_j f(x_j) = int_a^b p(x) dx``.

    ``p`` is the trigonometric interpolant of the node values; ``a`` and ``b``
    are clipped to the box. Exact for band-limited periodic functions.
    """
    lo, hi, m = grid.lo, grid.hi, grid.m
    a, b = max(a, lo), min(b, hi)
    if b <= a:
        return np.zeros(m)
    xa, xb = a - lo, b - lo
    xj = grid.x - lo
    k = grid.k
    w = np.full(m, (xb - xa) / m)
    for idx in range(1, m):
        kk = k[idx]
        if m % 2 == 0 and idx == m // 2:
            # cos(k x) part only
            kk = abs(kk)
            w += np.cos(kk * xj) * (np.sin(kk * xb) - np.sin(kk * xa)) / (kk * m)
            continue
        # e^{ik(x - x_j)} integrated, real part (modes +k/-k pair up)
        w += (np.sin(kk * (xb - xj)) - np.sin(kk * (xa - xj))) / (kk * m)
    return w


def point_weights(grid: Grid, x: float) -> np.ndarray:
    """Weights evaluating the trigonometric interpolant at ``x``."""
    m = grid.m
    xj = grid.x - grid.lo
    xx = x - grid.lo
    w = np.full(m, 1.0 / m)
    for idx in range(1, m):
        kk = grid.k[idx]
        if m % 2 == 0 and idx == m // 2:
            w += np.cos(abs(kk) * xj) * np.cos(abs(kk) * xx) / m
            continue
        w += np.cos(kk * (xx - xj)) / m
    return w


def contract_axis(field: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    """Apply a 1-D functional along ``axis``, removing it."""
    return np.tensordot(field, weights, axes=([axis], [0]))
