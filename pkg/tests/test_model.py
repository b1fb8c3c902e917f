"""
Channel and array model tests: grid, steering vectors, channel matrix,
array gain and squint profiles.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from precoding.errors import InvalidArgumentError, SubcarrierIndexError
from precoding.model import (
    ArrayGeometry,
    OfdmGrid,
    PathSet,
    array_gain,
    channel_matrix,
    matched_gain,
    squint_profile,
    steering,
    subcarrier_frequencies,
    subcarrier_zetas,
)

FC = 300e9

# ============================================================================
# GRID
# ============================================================================

def test_center_subcarrier_is_carrier(fig_grid):
    freqs = subcarrier_frequencies(fig_grid)
    assert freqs.size == 129
    assert freqs[64] == 300e9
    assert fig_grid.frequency(65) == 300e9


def test_first_subcarrier_frequency(fig_grid):
    expected = 300e9 + (30e9 / 129) * (-64)
    assert fig_grid.frequency(1) == pytest.approx(expected, rel=1e-14)
    assert fig_grid.frequency(1) == pytest.approx(285.116e9, rel=1e-5)


def test_zero_bandwidth_collapses_to_carrier():
    grid = OfdmGrid(fc=FC, bandwidth=0.0, num_subcarriers=33)
    assert np.all(subcarrier_frequencies(grid) == FC)


def test_grid_symmetric_and_increasing(fig_grid):
    freqs = subcarrier_frequencies(fig_grid)
    assert np.all(np.diff(freqs) > 0)
    np.testing.assert_allclose(freqs + freqs[::-1], 2 * FC, rtol=1e-15)
    assert np.mean(subcarrier_zetas(fig_grid)) == pytest.approx(1.0, abs=1e-15)


def test_vectorized_and_scalar_frequencies_agree(fig_grid):
    scalar = [fig_grid.frequency(k) for k in range(1, 130)]
    np.testing.assert_allclose(subcarrier_frequencies(fig_grid), scalar, rtol=1e-15)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(fc=FC, bandwidth=30e9, num_subcarriers=128),
        dict(fc=FC, bandwidth=2 * FC, num_subcarriers=129),
        dict(fc=0.0, bandwidth=0.0, num_subcarriers=1),
        dict(fc=FC, bandwidth=-1.0, num_subcarriers=1),
    ],
)
def test_invalid_grid_rejected(kwargs):
    with pytest.raises(ValidationError):
        OfdmGrid(**kwargs)


@pytest.mark.parametrize("k", [0, 130, -1])
def test_subcarrier_index_out_of_range(fig_grid, k):
    with pytest.raises(SubcarrierIndexError):
        fig_grid.frequency(k)
    with pytest.raises(IndexError):
        fig_grid.zeta(k)


def test_single_subcarrier_is_narrowband():
    grid = OfdmGrid(fc=FC, bandwidth=30e9, num_subcarriers=1)
    assert grid.frequency(1) == FC


# ============================================================================
# GEOMETRY AND PATHS
# ============================================================================

def test_half_wavelength_spacing():
    geom = ArrayGeometry.half_wavelength(256, 16, FC)
    assert geom.spacing == pytest.approx(5e-4)
    assert geom.antennas_per_ttd == 16
    assert geom.spatial_scale(FC) == pytest.approx(1.0)


def test_geometry_requires_integer_split():
    with pytest.raises(ValidationError):
        ArrayGeometry.half_wavelength(250, 16, FC)
    with pytest.raises(ValidationError):
        ArrayGeometry.half_wavelength(2, 1, FC, num_rf=4)


def test_paths_from_angles():
    paths = PathSet.from_angles([np.pi / 6], [0.0], gains=[1.0], delays=[0.0])
    assert paths.psi_c[0] == pytest.approx(0.5)
    assert paths.aod[0] == pytest.approx(np.pi / 6)
    with pytest.raises(InvalidArgumentError):
        PathSet.from_angles([2.0], [0.0], gains=[1.0], delays=[0.0])


def test_paths_reject_mismatched_lengths():
    with pytest.raises(ValidationError):
        PathSet(gains=[1.0, 1.0], delays=[0.0], psi_c=[0.1], phi_c=[0.0])
    with pytest.raises(ValidationError):
        PathSet.from_directions([1.5])


def test_random_paths(rng):
    paths = PathSet.random(4, rng, delay_window=(0.0, 10e-9), num_rx=2)
    assert paths.num_paths == 4
    assert np.all((paths.delays >= 0) & (paths.delays <= 10e-9))
    assert np.all(np.abs(paths.psi_c) <= 1)
    assert not paths.psi_c.flags.writeable


# ============================================================================
# STEERING
# ============================================================================

def test_steering_single_element():
    np.testing.assert_allclose(steering(1, 0.37).entries, [1.0])


def test_steering_broadside():
    np.testing.assert_allclose(steering(4, 0.0).entries, 0.5 * np.ones(4))


def test_steering_endfire_phase():
    np.testing.assert_allclose(steering(2, 1.0).entries, np.array([1, -1]) / np.sqrt(2), atol=1e-15)


def test_steering_rejects_empty_array():
    with pytest.raises(InvalidArgumentError):
        steering(0, 0.5)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 1024), psi=st.floats(-1.0, 1.0))
def test_steering_unit_norm(n, psi):
    v = steering(n, psi).entries
    assert abs(np.linalg.norm(v) - 1.0) <= 1e-12
    assert v[0] == pytest.approx(1 / np.sqrt(n))
    np.testing.assert_allclose(np.abs(v), 1 / np.sqrt(n), rtol=1e-12)


# ============================================================================
# CHANNEL
# ============================================================================

def test_scalar_channel(fig_grid):
    geom = ArrayGeometry.half_wavelength(1, 1, FC)
    paths = PathSet.from_directions([0.3], phi_c=[0.2])
    H = channel_matrix(fig_grid, geom, paths, 65)
    np.testing.assert_allclose(H, [[1.0]], atol=1e-15)


def test_single_path_channel_is_rank_one(fig_grid):
    geom = ArrayGeometry.half_wavelength(8, 2, FC)
    paths = PathSet.from_directions([0.4], phi_c=[-0.3], num_rx=4)
    H = channel_matrix(fig_grid, geom, paths, 10)
    assert H.shape == (8, 4)
    assert np.linalg.matrix_rank(H) == 1
    assert np.linalg.norm(H, "fro") == pytest.approx(np.sqrt(32), rel=1e-12)


def test_zero_gain_path_only_rescales(fig_grid):
    geom = ArrayGeometry.half_wavelength(8, 2, FC, num_rf=2)
    one = PathSet.from_directions([0.4], phi_c=[0.1], delays=[3e-9], num_rx=2)
    two = PathSet.from_directions([0.4, -0.7], phi_c=[0.1, 0.5], gains=[1.0, 0.0], delays=[3e-9, 0.0], num_rx=2)
    H1 = channel_matrix(fig_grid, geom, one, 5)
    H2 = channel_matrix(fig_grid, geom, two, 5)
    np.testing.assert_allclose(H2 * np.sqrt(2), H1, atol=1e-12)


def test_channel_rejects_bad_inputs(fig_grid):
    geom = ArrayGeometry.half_wavelength(8, 2, FC)
    with pytest.raises(SubcarrierIndexError):
        channel_matrix(fig_grid, geom, PathSet.from_directions([0.1]), 0)
    with pytest.raises(InvalidArgumentError):
        channel_matrix(fig_grid, geom, PathSet.from_directions([0.1, 0.2]), 1)


# ============================================================================
# ARRAY GAIN
# ============================================================================

@pytest.mark.parametrize("nt", [1, 16, 128, 1024])
@pytest.mark.parametrize("psi", [-0.9, 0.0, 0.8])
def test_matched_gain_at_center(fig_grid, nt, psi):
    beam = steering(nt, psi).entries
    assert array_gain(beam, fig_grid, fig_grid.center_index, psi) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("k", [1, 20, 64, 66, 100, 129])
def test_inner_product_matches_closed_form(fig_grid, k):
    nt = 128
    beam = steering(nt, 0.8).entries
    psi_k = fig_grid.zeta(k) * 0.8
    assert array_gain(beam, fig_grid, k, 0.8) == pytest.approx(matched_gain(nt, psi_k, 0.8), abs=1e-9)


def test_removable_singularity():
    assert matched_gain(64, 0.5, 0.5) == 1.0


def test_edge_gain_collapses_for_large_arrays(fig_grid):
    beam = steering(1024, 0.8).entries
    assert array_gain(beam, fig_grid, 1, 0.8) < 0.05


@pytest.mark.parametrize("k", [1, 129])
def test_gain_decreases_with_array_size(fig_grid, k):
    gains = [array_gain(steering(nt, 0.8).entries, fig_grid, k, 0.8) for nt in (16, 128, 1024)]
    assert gains[0] > gains[1] > gains[2]


def test_gain_vanishes_as_array_grows(fig_grid):
    gains = [matched_gain(2**p, fig_grid.zeta(1) * 0.8, 0.8) for p in range(10, 16)]
    assert max(gains) < 0.02


def test_array_gain_requires_unit_norm(fig_grid):
    with pytest.raises(InvalidArgumentError):
        array_gain(np.ones(4), fig_grid, 1, 0.0)


# ============================================================================
# SQUINT PROFILE
# ============================================================================

def test_profile_without_bandwidth_is_flat():
    grid = OfdmGrid(fc=FC, bandwidth=0.0, num_subcarriers=17)
    geom = ArrayGeometry.half_wavelength(256, 16, FC)
    gains = np.array([g for _, g in squint_profile(grid, geom, 0.8)])
    np.testing.assert_allclose(gains, 1.0, atol=1e-12)


def test_profile_peaks_at_center(fig_grid):
    geom = ArrayGeometry.half_wavelength(16, 1, FC)
    profile = squint_profile(fig_grid, geom, 0.8)
    assert len(profile) == 129
    k_best, g_best = max(profile, key=lambda row: row[1])
    assert k_best == 65
    assert g_best == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("nt", [16, 128, 1024])
def test_profile_symmetric(fig_grid, nt):
    geom = ArrayGeometry.half_wavelength(nt, 1, FC)
    gains = np.array([g for _, g in squint_profile(fig_grid, geom, 0.8)])
    np.testing.assert_allclose(gains, gains[::-1], atol=1e-9)


def test_profile_mean_gain_drops_with_array_size(fig_grid):
    means = []
    for nt in (16, 128, 1024):
        geom = ArrayGeometry.half_wavelength(nt, 1, FC)
        gains = np.array([g for k, g in squint_profile(fig_grid, geom, 0.8) if k != 65])
        means.append(gains.mean())
    assert means[0] > means[1] > means[2]
    assert means[2] < 0.1
