import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from oracles import dense_echo, dense_hamiltonian
from scipy.linalg import expm

from rydephase.blockade import build_blockade_basis
from rydephase.cloud import AtomCloud, sample_positions
from rydephase.errors import InvalidArgument
from rydephase.manybody import (
    EchoCurve,
    EchoProtocol,
    aggregate_curves,
    apply_hamiltonian,
    disorder_average,
    echo_curve,
    echo_study,
    evolve,
    ground_state,
    hamiltonian_for,
    run_echo,
    rydberg_number,
)


def _full_basis(n, c6, seed):
    return build_blockade_basis(sample_positions(n, c6, seed), cutoff_kappa=math.inf)


def _embed(state, basis):
    full = np.zeros(2**basis.n_atoms, dtype=complex)
    full[basis.masks.astype(np.int64)] = state
    return full


def test_single_atom_drive():
    basis = build_blockade_basis(AtomCloud(np.array([[0.5, 0.5, 0.5]]), 0.0))
    out = apply_hamiltonian(np.array([1, 0], dtype=complex), basis)
    assert np.allclose(out, [0, 0.5])
    assert np.allclose(apply_hamiltonian(np.array([1, 0], dtype=complex), basis, -1), [0, -0.5])


def test_doubly_excited_pair():
    d = 0.2
    cloud = AtomCloud(np.array([[0.1, 0.1, 0.1], [0.1 + d, 0.1, 0.1]]), 0.01)
    basis = build_blockade_basis(cloud, math.inf)
    rr = np.zeros(4, dtype=complex)
    rr[basis.index_of(np.array([3], dtype=np.uint64))[0]] = 1
    out = apply_hamiltonian(rr, basis)
    expected = np.zeros(4, dtype=complex)
    expected[basis.index_of(np.array([3], dtype=np.uint64))[0]] = 0.01 / d**6
    expected[basis.index_of(np.array([1, 2], dtype=np.uint64))] = 0.5
    assert np.allclose(out, expected, rtol=1e-13)


def test_matvec_matches_kronecker_oracle():
    basis = _full_basis(6, 0.01, 4)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    h = dense_hamiltonian(basis.cloud.positions, 0.01, -1)
    assert np.allclose(_embed(apply_hamiltonian(psi, basis, -1), basis), h @ _embed(psi, basis), rtol=1e-12, atol=1e-12)


def test_truncated_matvec_is_projected_oracle():
    basis = build_blockade_basis(sample_positions(7, 0.05, 1), 20.0)
    h = dense_hamiltonian(basis.cloud.positions, 0.05)
    idx = basis.masks.astype(np.int64)
    assert np.allclose(hamiltonian_for(basis).dense(), h[np.ix_(idx, idx)], atol=1e-12)


@given(st.integers(2, 9), st.integers(0, 1000), st.sampled_from([-1, 1]))
def test_hermiticity(n, seed, sign):
    basis = build_blockade_basis(sample_positions(n, 0.01, seed), 20.0)
    rng = np.random.default_rng(seed)
    phi, psi = (rng.normal(size=(2, len(basis))) + 1j * rng.normal(size=(2, len(basis))))
    lhs = np.vdot(phi, apply_hamiltonian(psi, basis, sign))
    rhs = np.conj(np.vdot(psi, apply_hamiltonian(phi, basis, sign)))
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_zero_duration_is_identity():
    basis = _full_basis(4, 0.01, 0)
    psi = ground_state(basis)
    assert np.array_equal(evolve(psi, basis, 1, 0.0), psi)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.7])
def test_single_atom_rabi(t):
    basis = build_blockade_basis(AtomCloud(np.array([[0.5, 0.5, 0.5]]), 0.0))
    psi = evolve(ground_state(basis), basis, 1, t)
    assert rydberg_number(psi, basis) == pytest.approx(math.sin(t / 2) ** 2, abs=1e-10)


def test_blockaded_pair_trajectory():
    # pair shift 1000 Omega
    cloud = AtomCloud(np.array([[0.1, 0.1, 0.1], [0.6, 0.1, 0.1]]), 1000 * 0.5**6)
    basis = build_blockade_basis(cloud, math.inf)
    h = dense_hamiltonian(cloud.positions, cloud.c6)
    psi0 = np.zeros(4, dtype=complex)
    psi0[0] = 1
    counts = np.array([0, 1, 1, 2])
    state = ground_state(basis)
    dt = 0.25
    for k in range(1, 25):
        state = evolve(state, basis, 1, dt, 1e-10)
        ref = expm(-1j * k * dt * h) @ psi0
        assert rydberg_number(state, basis) == pytest.approx(float(np.abs(ref) ** 2 @ counts), abs=1e-8)
        # collective sqrt(2) Omega oscillation of the blockaded pair
        assert rydberg_number(state, basis) == pytest.approx(math.sin(math.sqrt(2) * k * dt / 2) ** 2, abs=5e-3)


def test_rydberg_number_examples():
    basis = _full_basis(2, 0.0, 0)
    assert rydberg_number(ground_state(basis), basis) == 0
    single = np.zeros(4, dtype=complex)
    single[1] = 1
    assert rydberg_number(single, basis) == 1
    sup = np.zeros(4, dtype=complex)
    sup[basis.index_of(np.array([0, 3], dtype=np.uint64))] = 1 / math.sqrt(2)
    assert rydberg_number(sup, basis) == pytest.approx(1.0)


@given(st.integers(2, 9), st.integers(0, 100), st.floats(0.1, 3.0))
def test_norm_conserved(n, seed, t):
    basis = build_blockade_basis(sample_positions(n, 0.01, seed), 20.0)
    psi = evolve(ground_state(basis), basis, 1, t)
    psi = evolve(psi, basis, -1, t / 2)
    assert abs(np.linalg.norm(psi) - 1) < 1e-9


def test_energy_conserved_within_segment():
    basis = build_blockade_basis(sample_positions(10, 0.01, 2), 20.0)
    rng = np.random.default_rng(3)
    psi = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    psi /= np.linalg.norm(psi)
    e0 = np.vdot(psi, apply_hamiltonian(psi, basis)).real
    out = evolve(psi, basis, 1, 2.0)
    e1 = np.vdot(out, apply_hamiltonian(out, basis)).real
    assert abs(e1 - e0) < 1e-8 * max(1.0, abs(e0))


def test_step_halving_convergence():
    # composing two half steps equals one full step
    basis = build_blockade_basis(sample_positions(9, 0.01, 5), 20.0)
    whole = evolve(ground_state(basis), basis, 1, 1.5)
    halves = evolve(evolve(ground_state(basis), basis, 1, 0.75), basis, 1, 0.75)
    assert np.linalg.norm(whole - halves) < 1e-8


def test_noninteracting_echo_reverses():
    basis = _full_basis(5, 0.0, 0)
    assert run_echo(basis, EchoProtocol(1.2, 0.6)) < 1e-8


def test_flip_at_zero_equals_plain_excitation():
    basis = build_blockade_basis(sample_positions(6, 0.01, 1), 20.0)
    minus = run_echo(basis, EchoProtocol(1.0, 0.0))
    plus = run_echo(basis, EchoProtocol(1.0, 1.0))
    assert minus == pytest.approx(plus, abs=1e-10)


def test_interacting_echo_matches_dense_oracle():
    basis = _full_basis(6, 0.01, 0)
    n_r = run_echo(basis, EchoProtocol(1.0, 0.5), tol=1e-10)
    _, ref = dense_echo(basis.cloud.positions, 0.01, 1.0, 0.5)
    assert n_r > 0
    assert n_r == pytest.approx(ref, abs=1e-6)


def test_protocol_validation():
    with pytest.raises(InvalidArgument):
        EchoProtocol(0.0, 0.0)
    with pytest.raises(InvalidArgument):
        EchoProtocol(1.0, 1.5)


def test_state_validation():
    basis = _full_basis(3, 0.0, 0)
    with pytest.raises(InvalidArgument):
        apply_hamiltonian(np.ones(3, dtype=complex), basis)
    with pytest.raises(InvalidArgument):
        apply_hamiltonian(ground_state(basis), basis, drive_sign=0)
    with pytest.raises(InvalidArgument):
        evolve(ground_state(basis), basis, 1, -1.0)


def test_echo_curve_shape_and_symmetry():
    basis = _full_basis(4, 0.0, 0)
    curve = echo_curve(basis, 1.0, grid_points=11)
    assert len(curve) == 11 and curve.tau_p[0] == 0 and curve.tau_p[-1] == 1.0
    assert np.allclose(curve.n_r, curve.n_r[::-1], atol=1e-9)
    assert np.all(curve.n_r >= -1e-12) and np.all(curve.n_r <= 4)
    with pytest.raises(InvalidArgument):
        echo_curve(basis, 1.0, grid_points=4)


def test_echo_curve_matches_point_runs():
    basis = build_blockade_basis(sample_positions(7, 0.01, 2), 20.0)
    curve = echo_curve(basis, 1.2, grid_points=7)
    for tp, nr in zip(curve.tau_p, curve.n_r):
        assert nr == pytest.approx(run_echo(basis, EchoProtocol(1.2, float(tp))), abs=1e-8)


def test_single_realization_equals_echo_curve():
    avg = disorder_average(1, 3, 6, 0.01, 1.0, grid_points=9)
    basis = build_blockade_basis(sample_positions(6, 0.01, 3), 20.0)
    assert np.allclose(avg.n_r, echo_curve(basis, 1.0, 9).n_r, atol=1e-12)
    assert np.all(avg.stderr == 0)


def test_no_interaction_no_variance():
    avg = disorder_average(4, 0, 5, 0.0, 1.0, grid_points=7)
    assert np.all(avg.stderr < 1e-10)


def test_aggregate_statistics():
    tp = np.linspace(0, 1, 5)
    rng = np.random.default_rng(0)
    data = rng.uniform(0, 2, size=(6, 5))
    avg = aggregate_curves(EchoCurve(1.0, tp, row) for row in data)
    assert np.allclose(avg.n_r, data.mean(axis=0))
    assert np.allclose(avg.stderr, data.std(axis=0, ddof=1) / math.sqrt(6))
    with pytest.raises(InvalidArgument):
        aggregate_curves([EchoCurve(1.0, tp, data[0]), EchoCurve(2.0, tp * 2, data[1])])


def test_study_reuses_seeds_per_tau():
    study = echo_study(6, 0.01, [0.8, 1.2], 3, base_seed=10, grid_points=5)
    assert set(study) == {0.8, 1.2}
    assert study[0.8].meta["n_realizations"] == 3
    direct = disorder_average(3, 10, 6, 0.01, 1.2, grid_points=5)
    assert np.allclose(study[1.2].n_r, direct.n_r, atol=1e-12)


def test_curve_round_trip():
    curve = EchoCurve(1.0, [0, 0.5, 1.0], [1.0, 0.1, 1.0], [0, 0, 0], 4, {"seed": 1})
    back = EchoCurve.from_dict(curve.to_dict())
    assert np.array_equal(back.n_r, curve.n_r) and back.n_atoms == 4
    assert [r["tau_p"] for r in curve.rows()] == [0, 0.5, 1.0]


def test_curve_validation():
    with pytest.raises(InvalidArgument):
        EchoCurve(1.0, [0, 0.5, 0.4], [0, 0, 0])
    with pytest.raises(InvalidArgument):
        EchoCurve(1.0, [0, 2.0], [0, 0])
