import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import ENTANGLED, TwoParticleSuperposition, free_velocity, free_width

from bohmlab.dynamics import (Controls, FullLaw, Permutation, ReducedLaw, SymmetrizedLaw,
                              apply_permutation, build_series, integrate,
                              relabel_then_integrate_check, velocity_full, velocity_reduced,
                              velocity_symmetrized)
from bohmlab.dynamics.integrate import BatchIntegrator, write_trajectory_csv
from bohmlab.errors import CoincidenceError, NodeProximityError, TrajectoryAbort
from bohmlab.wavefield import (GridSpec, IndexSet, LabeledConfig, ModelParams, Potential,
                               UnorderedConfig, build_grid, density, density_current, evolve,
                               init_state, spectral_derivative)


# -- permutations ---------------------------------------------------------------------
def test_identity_and_transposition():
    q = np.array([[1.0], [2.0]])
    np.testing.assert_array_equal(apply_permutation(Permutation.identity(2), q), q)
    np.testing.assert_array_equal(apply_permutation(Permutation.transposition(2, 0, 1), q), q[::-1])


@given(st.permutations(range(4)), st.permutations(range(4)))
def test_composition(a, b):
    s, t = Permutation(a), Permutation(b)
    q = np.arange(8.0).reshape(4, 2)
    np.testing.assert_array_equal(apply_permutation(s @ t, q),
                                  apply_permutation(s, apply_permutation(t, q)))
    np.testing.assert_array_equal(apply_permutation(s.inverse(), apply_permutation(s, q)), q)


def test_apply_permutation_moves_slot_j_to_sigma_j():
    sigma = Permutation([2, 0, 1])
    q = LabeledConfig(np.array([[10.0], [20.0], [30.0]]), 0.0)
    out = apply_permutation(sigma, q).positions[:, 0]
    assert out[2] == 10.0 and out[0] == 20.0 and out[1] == 30.0


# -- velocity fields ---------------------------------------------------------------------
def test_ground_state_velocity_zero():
    g = build_grid(GridSpec(2, 1, (-10.0, 10.0), 128))
    psi = init_state({"kind": "harmonic", "quanta": [[0], [0]], "stiffness": [1.0, 1.0]}, g,
                     ModelParams((1.0, 1.0)))
    assert np.max(np.abs(velocity_full(psi, [[0.37], [-1.2]]))) < 1e-10


def test_plane_wave_velocity():
    g = build_grid(GridSpec(2, 1, (-20.0, 20.0), 64))
    k = 2 * math.pi / 40
    psi = init_state({"kind": "plane_wave", "wavenumbers": [[5 * k], [-3 * k]]}, g,
                     ModelParams((2.0, 0.5), hbar=1.3))
    v = velocity_full(psi, [[0.123], [-4.56]])
    np.testing.assert_allclose(v[:, 0], [1.3 * 5 * k / 2.0, -1.3 * 3 * k / 0.5], atol=1e-9)


def test_free_gaussian_velocity_closed_form(grid1):
    psi = init_state({"kind": "gaussian", "packets": [{"center": [0.0], "width": 1.0}]}, grid1,
                     ModelParams((1.0,)))
    out = evolve(psi, 1e-3, 1000)
    for i in (100, 128, 140, 150):
        q = grid1.x[i]
        assert abs(velocity_full(out, [[q]])[0, 0] - free_velocity(q, 1.0)) < 1e-4


def test_reduced_identity_case(entangled):
    q = [[0.4], [-1.1]]
    d = velocity_reduced(entangled, IndexSet.all(2), q) - velocity_full(entangled, q)
    assert np.max(np.abs(d)) < 1e-10


def test_reduced_product_state(grid2, params2, grid1):
    rec = {"kind": "gaussian", "packets": [{"center": [0.5], "width": 1.2, "momentum": [0.8]},
                                           {"center": [-2.0], "width": 0.9, "momentum": [-1.0]}]}
    psi = init_state(rec, grid2, params2)
    one = init_state({"kind": "gaussian", "packets": [rec["packets"][0]]}, grid1, ModelParams((1.0,)))
    psi_t, one_t = evolve(psi, 1e-3, 300), evolve(one, 1e-3, 300)
    for q in (-1.3, 0.77, 2.4):
        a = velocity_reduced(psi_t, IndexSet([1], 2), [[q]])[0, 0]
        b = velocity_full(one_t, [[q]])[0, 0]
        assert abs(a - b) < 1e-8


def test_reduced_entangled_quadrature(entangled, grid2):
    o = TwoParticleSuperposition()
    for i in (90, 110, 128, 140, 160):
        q = grid2.x[i]
        ref = o.j1(q) / o.rho1(q)
        assert abs(velocity_reduced(entangled, IndexSet([1], 2), [[q]])[0, 0] - ref) < 1e-4


def test_symmetrized_single_particle(grid1):
    psi = init_state({"kind": "gaussian", "packets": [{"center": [1.0], "momentum": [0.7]}]}, grid1,
                     ModelParams((1.0,)))
    psi = evolve(psi, 1e-3, 200)
    for q in (-0.4, 1.9):
        assert abs(velocity_symmetrized(psi, [[q]])[0, 0] - velocity_full(psi, [[q]])[0, 0]) < 1e-12


def test_symmetrized_equals_full_for_symmetric_state(grid2, params2):
    psi = init_state({"kind": "symmetrize", "state": ENTANGLED}, grid2, params2)
    q = np.array([[1.3], [-0.6]])
    vs = velocity_symmetrized(psi, q)
    vf = velocity_full(psi, q)
    assert np.max(np.abs(vs - vf)) < 1e-10
    vs2 = velocity_symmetrized(psi, q[::-1])
    assert np.max(np.abs(vs2 - velocity_full(psi, q[::-1]))) < 1e-10


def test_symmetrized_two_term_sum_oracle(entangled, grid2):
    o = TwoParticleSuperposition()

    def rho(a, b):
        return abs(o.psi(a, b)) ** 2

    def j1(a, b):
        return (np.conj(o.psi(a, b)) * o.d1psi(a, b)).imag

    def j2(a, b):
        return (np.conj(o.psi(a, b)) * o.d2psi(a, b)).imag

    for i, k in ((100, 140), (120, 131), (150, 90)):
        q1, q2 = grid2.x[i], grid2.x[k]
        den = rho(q1, q2) + rho(q2, q1)
        ref = [(j1(q1, q2) + j2(q2, q1)) / den, (j2(q1, q2) + j1(q2, q1)) / den]
        v = velocity_symmetrized(entangled, [[q1], [q2]])[:, 0]
        np.testing.assert_allclose(v, ref, atol=1e-4)


def test_symmetrized_coincidence_rejected(entangled):
    with pytest.raises(CoincidenceError):
        velocity_symmetrized(entangled, [[0.5], [0.5]])


def test_node_proximity_raised(grid2, params2):
    psi = init_state({"kind": "antisymmetrize", "state": {"kind": "gaussian", "packets": [
        {"center": [-1.0]}, {"center": [1.0]}]}}, grid2, params2)
    with pytest.raises(NodeProximityError):
        velocity_full(psi, [[0.3125], [0.3125]])


def test_continuity_equation(entangled, grid2):
    h = 1e-3
    rho_p = density(evolve(entangled, h / 10, 10))
    rho_m = density(evolve(entangled.replace(np.conj(entangled.amplitudes), 0.0), h / 10, 10))
    # conj(psi) evolved forward equals conj(psi(-t)) for V = 0
    drho = (rho_p - rho_m) / (2 * h)
    b = density_current(entangled)
    div = sum(spectral_derivative(b.currents[i, 0], grid2, i).real for i in range(2))
    assert np.max(np.abs(drho + div)) < 1e-5


# -- integration ---------------------------------------------------------------------------
def test_static_field_holds_position():
    g = build_grid(GridSpec(2, 1, (-10.0, 10.0), 64))
    psi = init_state({"kind": "plane_wave", "wavenumbers": [[0.0], [0.0]]}, g, ModelParams((1.0, 1.0)))
    tr = integrate(psi, [[0.7], [-2.0]], FullLaw(), 0.5)
    assert np.max(np.abs(tr.positions[:, :, 0] - [0.7, -2.0])) < 1e-12


def test_ground_state_nearly_static():
    # the split-step ground state carries an O(dt^2) current
    g = build_grid(GridSpec(1, 1, (-10.0, 10.0), 128))
    psi = init_state({"kind": "harmonic", "quanta": [[0]], "stiffness": [1.0]}, g, ModelParams((1.0,)))
    tr = integrate(psi, [[0.7]], FullLaw(), 0.5, potential=Potential.harmonic([1.0]))
    assert np.max(np.abs(tr.positions - 0.7)) < 1e-5


def test_plane_wave_trajectory():
    g = build_grid(GridSpec(2, 1, (-20.0, 20.0), 64))
    k = 2 * math.pi / 40
    psi = init_state({"kind": "plane_wave", "wavenumbers": [[4 * k], [-2 * k]]}, g,
                     ModelParams((1.0, 2.0)))
    tr = integrate(psi, [[1.0], [-3.0]], FullLaw(), 1.0)
    np.testing.assert_allclose(tr.positions[-1, :, 0], [1.0 + 4 * k, -3.0 - k], atol=1e-6)


@pytest.mark.parametrize("q0", [0.5, -1.7, 2.5])
def test_free_gaussian_trajectory(q0):
    g = build_grid(GridSpec(1, 1, (-20.0, 20.0), 1024))
    psi = init_state({"kind": "gaussian", "packets": [{"center": [0.0], "width": 1.0}]}, g,
                     ModelParams((1.0,)))
    c = Controls()
    tr = integrate(psi, [[q0]], FullLaw(), 1.0, controls=c)
    ref = np.array([q0 * free_width(t) for t in tr.times])
    assert np.max(np.abs(tr.positions[:, 0, 0] - ref)) < 1e-3
    fine = integrate(psi, [[q0]], FullLaw(), 1.0, controls=c.halved())
    assert np.max(np.abs(fine.positions[:, 0, 0] - tr.positions[:, 0, 0])) < 1e-6


def test_reduced_all_equals_full(entangled):
    c = Controls()
    ser = build_series(entangled, 0.5, c)
    x0 = np.array([[0.3, -1.0], [-2.2, 1.4], [1.1, 0.05]])
    a = BatchIntegrator(FullLaw().track(ser), FullLaw(), c).run(x0, 0.0, 0.5)
    law = ReducedLaw(IndexSet.all(2))
    b = BatchIntegrator(law.track(ser), law, c).run(x0, 0.0, 0.5)
    assert np.max(np.abs(a.x - b.x)) < 1e-10


def test_relabel_invariance_n2(entangled):
    r = relabel_then_integrate_check(entangled, [[-1.0], [0.8]], Permutation.transposition(2, 0, 1), 0.5)
    assert r.passed and r.max_deviation < 1e-9


def test_relabel_identity_bitwise(entangled):
    r = relabel_then_integrate_check(entangled, [[-1.0], [0.8]], Permutation.identity(2), 0.3)
    assert r.max_deviation == 0.0


def test_relabel_invariance_n3():
    g = build_grid(GridSpec(3, 1, (-10.0, 10.0), 64))
    rec = {"kind": "gaussian", "packets": [{"center": [-2.0], "momentum": [1.0]},
                                           {"center": [0.5]}, {"center": [2.5], "momentum": [-1.0]}]}
    psi = init_state(rec, g, ModelParams.equal(3))
    sigma = Permutation.random(3, np.random.default_rng(4))
    r = relabel_then_integrate_check(psi, [[-1.9], [0.4], [2.7]], sigma, 0.3)
    assert r.passed


def test_symmetrized_trajectory_is_unordered(entangled):
    tr = integrate(entangled, [[1.0], [-1.0]], SymmetrizedLaw(), 0.2)
    assert all(isinstance(c, UnorderedConfig) for c in tr.configs)


def test_abort_on_leaving_box(grid1):
    k = 2 * math.pi * 40 / 40
    psi = init_state({"kind": "plane_wave", "wavenumbers": [[k]]}, grid1, ModelParams((1.0,)))
    with pytest.raises(TrajectoryAbort):
        integrate(psi, [[19.0]], FullLaw(), 1.0)


def test_trajectory_csv(tmp_path, entangled):
    tr = integrate(entangled, [[1.0], [-1.0]], FullLaw(), 0.1)
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, [tr])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "particle", "axis", "value", "law", "flags"]
    assert len(rows) == 1 + len(tr.times) * 2
    assert rows[1][4] == "full" and rows[1][5] == ""
