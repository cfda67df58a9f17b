import numpy as np
import pytest
from numpy.testing import assert_allclose

from sssta.array_model import (
    DipolePlacement,
    Orientation,
    SamplingGrid,
    SourceState,
    full_steering,
    placement_steering,
    polarization_vector,
    response,
    responses,
    spatial_steering,
    steering_matrix,
)
from sssta.errors import InvalidScenarioError


def test_spatial_steering_unit_modulus():
    grid = SamplingGrid(0.0, 0.1, 51)
    src = SourceState(37.0, -90.0, 30.0, 20.0)
    assert_allclose(np.abs(spatial_steering(grid, src)), 1.0, atol=1e-12)


def test_spatial_steering_broadside_is_all_ones():
    grid = SamplingGrid(0.0, 0.25, 9)
    src = SourceState(0.0, 90.0, 45.0, 100.0)
    assert_allclose(spatial_steering(grid, src), np.ones(9), atol=1e-12)


def test_spatial_steering_phase_progression():
    grid = SamplingGrid(0.0, 0.5, 3)
    src = SourceState(30.0, 90.0, 45.0, 0.0)
    # sin(30) = 0.5, so phase steps are -2 pi * 0.5 * 0.5
    expected = np.exp(-1j * np.pi * 0.5 * np.arange(3))
    assert_allclose(spatial_steering(grid, src), expected, atol=1e-12)


def test_polarization_gamma_zero_collapses_to_horizontal():
    pol = polarization_vector(SourceState(25.0, 90.0, 0.0, 70.0))
    assert_allclose(pol, [-1.0, 0.0, 0.0], atol=1e-12)


def test_polarization_gamma_ninety_collapses_to_vertical():
    theta, eta = 40.0, 100.0
    pol = polarization_vector(SourceState(theta, 90.0, 90.0, eta))
    phase = np.exp(1j * np.deg2rad(eta))
    t = np.deg2rad(theta)
    assert_allclose(pol, [0.0, phase * np.cos(t), -phase * np.sin(t)], atol=1e-12)


def test_polarization_conventions_differ_only_in_y():
    src = SourceState(10.0, 0.0, 30.0, 45.0)
    printed = polarization_vector(src, "as-printed")
    textbook = polarization_vector(src, "textbook")
    assert_allclose(printed[[0, 2]], textbook[[0, 2]], atol=1e-15)
    cos_gamma = np.cos(np.deg2rad(30.0))
    assert_allclose(textbook[1] - printed[1], 2 * cos_gamma, atol=1e-12)


def test_unknown_convention_rejected():
    with pytest.raises(InvalidScenarioError):
        polarization_vector(SourceState(0.0, 90.0, 45.0, 0.0), "other")


def test_steering_matrix_interleaves_axes():
    positions = [0.0, 1.3]
    sources = [SourceState(20.0, 90.0, 45.0, 100.0), SourceState(50.0, -90.0, 45.0, 100.0)]
    S = steering_matrix(positions, sources)
    assert S.shape == (2, 6)
    for row, src in enumerate(sources):
        grid = SamplingGrid(0.0, 1.3, 2)
        spatial = spatial_steering(grid, src)
        pol = polarization_vector(src)
        assert_allclose(S[row], np.kron(spatial, pol), atol=1e-12)


def test_full_steering_matches_matrix_row():
    grid = SamplingGrid(0.5, 0.2, 4)
    src = SourceState(33.0, 90.0, 60.0, -10.0)
    assert_allclose(full_steering(grid, src), steering_matrix(grid.positions, [src])[0])


def test_placement_steering_selects_axis_column():
    placements = [DipolePlacement(0.4, Orientation.Y), DipolePlacement(1.7, Orientation.Z)]
    sources = [SourceState(15.0, 90.0, 45.0, 100.0)]
    S_full = steering_matrix([0.4, 1.7], sources)
    assert_allclose(placement_steering(placements, sources)[0], S_full[0, [1, 5]])


def test_response_applies_conjugated_weights():
    placements = [
        DipolePlacement(0.0, Orientation.X, 0.3 - 0.7j),
        DipolePlacement(1.1, Orientation.Y, -1.2 + 0.4j),
    ]
    src = SourceState(42.0, -90.0, 45.0, 100.0)
    columns = placement_steering(placements, [src])[0]
    expected = columns @ np.conj([0.3 - 0.7j, -1.2 + 0.4j])
    assert response(placements, src) == pytest.approx(expected, abs=1e-12)


def test_empty_array_has_zero_response():
    sources = [SourceState(0.0, 90.0, 45.0, 100.0)] * 3
    assert_allclose(responses([], sources), np.zeros(3))


def test_sampling_grid_spanning():
    grid = SamplingGrid.spanning(1.2, 10.0, 101)
    assert grid.spacing == pytest.approx(0.088)
    assert grid.end == pytest.approx(10.0)
    assert SamplingGrid.spanning(3.0, 2.0, 10).count == 1


@pytest.mark.parametrize("kwargs", [dict(theta=91.0), dict(gamma=-1.0), dict(eta=180.0)])
def test_invalid_source_rejected(kwargs):
    params = dict(theta=0.0, phi=90.0, gamma=45.0, eta=0.0)
    params.update(kwargs)
    with pytest.raises(InvalidScenarioError):
        SourceState(**params)


def test_signed_theta():
    assert SourceState(30.0, -90.0, 45.0, 0.0).theta_signed == -30.0
    assert SourceState(30.0, 90.0, 45.0, 0.0).theta_signed == 30.0
