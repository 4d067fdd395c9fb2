import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from rydephase.cloud import (
    AtomCloud,
    CloudGeometry,
    pair_interactions,
    peak_density,
    radial_width,
    sample_positions,
)
from rydephase.errors import InvalidArgument


def test_single_atom():
    cloud = sample_positions(1, 0.0, 42)
    assert cloud.positions.shape == (1, 3)
    assert np.all((cloud.positions >= 0) & (cloud.positions < 1))


def test_same_seed_same_cloud():
    a = sample_positions(5, 0.01, 7)
    b = sample_positions(5, 0.01, 7)
    assert np.array_equal(a.positions, b.positions)
    assert a == b and hash(a) == hash(b)
    assert sample_positions(5, 0.01, 8) != a


def test_generator_identity_is_pcg64():
    ref = np.random.Generator(np.random.PCG64(11)).random((4, 3))
    assert np.array_equal(sample_positions(4, 0.0, 11).positions, ref)


def test_large_sample_mean_and_uniformity():
    pos = sample_positions(10_000, 0.0, 1).positions
    means = pos.mean(axis=0)
    assert np.all((means > 0.49) & (means < 0.51))
    # KS statistic below the 1% critical value 1.628/sqrt(n)
    crit = 1.628 / math.sqrt(len(pos))
    for axis in range(3):
        assert stats.kstest(pos[:, axis], "uniform").statistic < crit


def test_positions_are_read_only():
    cloud = sample_positions(3, 0.01, 0)
    with pytest.raises(ValueError):
        cloud.positions[0, 0] = 0.5


def test_round_trip_dict():
    cloud = sample_positions(6, 0.01, 123)
    assert AtomCloud.from_dict(cloud.to_dict()) == cloud


@pytest.mark.parametrize("n,c6,seed", [(0, 0.0, 1), (3, -1.0, 1), (3, 0.0, -1), (3, 0.0, 2**64), (2.5, 0.0, 1)])
def test_invalid_arguments(n, c6, seed):
    with pytest.raises(InvalidArgument):
        sample_positions(n, c6, seed)


def test_positions_outside_box_rejected():
    with pytest.raises(InvalidArgument):
        AtomCloud(np.array([[0.5, 0.5, 1.0]]), 0.0)


def test_pair_interactions_match_formula():
    cloud = sample_positions(5, 0.01, 2)
    v = pair_interactions(cloud)
    assert np.allclose(np.diag(v), 0) and np.allclose(v, v.T)
    d = np.linalg.norm(cloud.positions[1] - cloud.positions[3])
    assert v[1, 3] == pytest.approx(0.01 / d**6, rel=1e-12)


def test_peak_density_unit_case():
    assert peak_density(CloudGeometry((2 * math.pi) ** 1.5, 1.0, 1.0)) == pytest.approx(1.0, rel=1e-14)


def test_peak_density_trap_scale():
    # 1e5 / ((2 pi)^1.5 * 25e-12 * 4e-4), evaluated by hand
    assert peak_density(CloudGeometry(1e5, 5e-6, 4e-4)) == pytest.approx(6.3494e17, rel=1e-4)


@given(
    st.floats(1.0, 1e8), st.floats(1e-7, 1e-3), st.floats(1e-7, 1e-3), st.floats(0.1, 10.0), st.floats(0.1, 10.0)
)
def test_peak_density_homogeneity(n0, sr, sz, a, s):
    base = peak_density(CloudGeometry(n0, sr, sz))
    assert peak_density(CloudGeometry(a * n0, sr, sz)) == pytest.approx(a * base, rel=1e-12)
    assert peak_density(CloudGeometry(n0, s * sr, s * sz)) == pytest.approx(base / s**3, rel=1e-12)


def test_radial_width_unit_case():
    from scipy.constants import k

    assert radial_width(1.0, 2.5 / k, 2.5) == pytest.approx(1.0, rel=1e-14)


def test_radial_width_trap_scale():
    # sqrt(k_B * 6 uK / m_Rb87) / (2 pi * 735 Hz) = 5.188 um
    assert radial_width(2 * math.pi * 735, 6e-6, 1.443e-25) == pytest.approx(5.188e-6, rel=1e-3)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, 0)])
def test_radial_width_rejects_nonpositive(args):
    with pytest.raises(InvalidArgument):
        radial_width(*args)


def test_geometry_requires_positive_fields():
    with pytest.raises(InvalidArgument):
        CloudGeometry(1.0, 0.0, 1.0)
