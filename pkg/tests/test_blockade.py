import numpy as np
import pytest
from hypothesis import given, strategies as st
from oracles import brute_force_masks

from rydephase.blockade import basis_dimension, build_blockade_basis, popcount
from rydephase.cloud import AtomCloud, sample_positions
from rydephase.errors import InvalidArgument, ResourceLimitError


def test_no_interaction_gives_full_product_basis():
    cloud = sample_positions(6, 0.0, 5)
    for kappa in (1e-6, 20.0, 1e9):
        basis = build_blockade_basis(cloud, kappa)
        assert len(basis) == 64
        assert set(basis.masks.tolist()) == set(range(64))


def test_two_atom_pair_above_cutoff():
    kappa = 20.0
    d = 0.1
    c6 = 10 * kappa * d**6
    cloud = AtomCloud(np.array([[0.2, 0.2, 0.2], [0.3, 0.2, 0.2]]), c6)
    basis = build_blockade_basis(cloud, kappa)
    assert basis.masks.tolist() == [0b00, 0b01, 0b10]


@pytest.mark.parametrize("n,seed", [(8, 3), (10, 0), (10, 9)])
def test_matches_exhaustive_filter(n, seed):
    cloud = sample_positions(n, 0.01, seed)
    basis = build_blockade_basis(cloud, 20.0)
    assert basis.masks.tolist() == brute_force_masks(cloud.positions, 0.01, 20.0)


def test_excitation_cap_matches_filter():
    cloud = sample_positions(9, 0.01, 4)
    basis = build_blockade_basis(cloud, 20.0, max_excitations=2)
    assert basis.masks.tolist() == brute_force_masks(cloud.positions, 0.01, 20.0, 2)


def test_dimension_examples():
    assert basis_dimension(build_blockade_basis(sample_positions(3, 0.0, 1))) == 8
    cloud = sample_positions(5, 1e6, 1)  # every pair far above the cutoff
    assert basis_dimension(build_blockade_basis(cloud, 20.0)) == 6


def test_canonical_order_and_ground_first():
    basis = build_blockade_basis(sample_positions(10, 0.01, 2))
    assert basis.masks[0] == 0
    keys = list(zip(popcount(basis.masks).tolist(), basis.masks.tolist()))
    assert keys == sorted(keys)


def test_index_of():
    basis = build_blockade_basis(sample_positions(7, 0.01, 1))
    idx = basis.index_of(basis.masks[::-1])
    assert np.array_equal(idx, np.arange(len(basis))[::-1])
    missing = [m for m in range(2**7) if m not in set(basis.masks.tolist())]
    if missing:
        assert basis.index_of(np.array(missing[:1], dtype=np.uint64))[0] == -1


def test_occupation_matrix():
    basis = build_blockade_basis(sample_positions(5, 0.01, 1))
    occ = basis.occupation
    assert occ.shape == (len(basis), 5)
    assert np.array_equal(occ.sum(axis=1), basis.excitations)


def test_resource_limit_names_size():
    cloud = sample_positions(30, 0.01, 0)
    with pytest.raises(ResourceLimitError) as exc:
        build_blockade_basis(cloud, 20.0, max_dimension=1000)
    assert exc.value.size > 1000
    assert str(exc.value.size) in str(exc.value)


@pytest.mark.parametrize("kwargs", [{"cutoff_kappa": 0}, {"max_excitations": 0}, {"max_excitations": 1.5}])
def test_invalid_arguments(kwargs):
    with pytest.raises(InvalidArgument):
        build_blockade_basis(sample_positions(3, 0.01, 0), **kwargs)


def test_too_many_atoms():
    with pytest.raises(InvalidArgument):
        build_blockade_basis(sample_positions(65, 0.01, 0))


def test_serialization_is_deterministic():
    a = build_blockade_basis(sample_positions(8, 0.01, 6)).to_json()
    b = build_blockade_basis(sample_positions(8, 0.01, 6)).to_json()
    assert a == b


clouds = st.tuples(st.integers(2, 11), st.integers(0, 2**32), st.sampled_from([0.001, 0.01, 0.1]))


@given(clouds, st.floats(0.5, 200.0))
def test_downward_closed_and_cutoff_respected(spec, kappa):
    n, seed, c6 = spec
    cloud = sample_positions(n, c6, seed)
    basis = build_blockade_basis(cloud, kappa)
    members = set(basis.masks.tolist())
    for m in members:
        for i in range(n):
            if m >> i & 1:
                assert m & ~(1 << i) in members
    r = cloud.positions[:, None, :] - cloud.positions[None, :, :]
    with np.errstate(divide="ignore"):
        v = c6 / np.sum(r**2, axis=-1) ** 3
    for m in members:
        bits = [i for i in range(n) if m >> i & 1]
        for a in bits:
            for b in bits:
                if a < b:
                    assert v[a, b] < kappa


@given(clouds, st.floats(0.5, 100.0), st.floats(1.0, 10.0))
def test_monotone_in_kappa(spec, kappa, factor):
    n, seed, c6 = spec
    cloud = sample_positions(n, c6, seed)
    small = set(build_blockade_basis(cloud, kappa).masks.tolist())
    large = set(build_blockade_basis(cloud, kappa * factor).masks.tolist())
    assert small <= large


@given(clouds, st.integers(1, 6))
def test_monotone_in_excitation_cap(spec, cap):
    n, seed, c6 = spec
    cloud = sample_positions(n, c6, seed)
    tight = set(build_blockade_basis(cloud, 20.0, max_excitations=cap).masks.tolist())
    loose = set(build_blockade_basis(cloud, 20.0, max_excitations=cap + 1).masks.tolist())
    assert tight <= loose
    assert all(bin(m).count("1") <= cap for m in tight)
