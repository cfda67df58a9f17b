from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sssta.array_model import DipolePlacement, Orientation, placement_steering, response, responses
from sssta.errors import InvalidScenarioError, RankDeficientError
from sssta.evaluation import response_error
from sssta.problem_builder import sample_scenario
from sssta.redesign import (
    OrientationMask,
    apply_weights,
    design_ula,
    redesign_masked,
    redesign_weights,
    ula_positions,
)

from helpers import small_scenario_with


def _kkt_oracle(columns, reference):
    """Dense augmented-system solve of min ||A x - b|| s.t. C x = d."""
    n = columns.shape[1]
    L = columns.shape[0]
    A = np.block([[columns.real, -columns.imag], [columns.imag, columns.real]])
    b = np.concatenate([reference.real, reference.imag])
    C = A[[0, L], :]
    d = np.array([1.0, 0.0])
    K = np.block([[2 * A.T @ A, C.T], [C, np.zeros((2, 2))]])
    x = np.linalg.solve(K, np.concatenate([2 * A.T @ b, d]))[: 2 * n]
    return np.conj(x[:n] + 1j * x[n:]), np.linalg.norm(A @ x - b)


def _random_placements(rng, count):
    positions = np.sort(rng.uniform(0.0, 3.0, count))
    axes = rng.integers(0, 3, count)
    # A y dipole always reaches the broadside mainlobe
    axes[0] = Orientation.Y
    return [DipolePlacement(float(p), Orientation(int(f))) for p, f in zip(positions, axes)]


def test_single_dipole_mainlobe_only(small_problem):
    mainlobe = small_problem.sources[0]
    problem = replace(small_problem, sources=(mainlobe,), reference=np.array([1.0 + 0j]))
    dipole = DipolePlacement(0.7, Orientation.Y)

    weights = redesign_weights([dipole], problem)

    s = placement_steering([dipole], [mainlobe])[0, 0]
    assert weights[0] == pytest.approx(1.0 / np.conj(s), abs=1e-12)
    assert response(apply_weights([dipole], weights), mainlobe) == pytest.approx(1.0, abs=1e-12)


def test_matches_dense_kkt_oracle(rng, small_problem):
    for _ in range(10):
        placements = _random_placements(rng, 6)
        weights = redesign_weights(placements, small_problem)

        columns = placement_steering(placements, small_problem.sources)
        expected, expected_residual = _kkt_oracle(columns, small_problem.reference)
        assert_allclose(weights, expected, atol=1e-8)

        achieved = responses(apply_weights(placements, weights), small_problem.sources)
        assert abs(achieved[0] - 1.0) <= 1e-9
        assert np.linalg.norm(achieved - small_problem.reference) == pytest.approx(expected_residual, abs=1e-8)


def test_redesign_does_not_increase_error(rng, small_problem):
    placements = _random_placements(rng, 5)
    original = apply_weights(placements, rng.standard_normal(5) + 1j * rng.standard_normal(5))
    # Rescale so the original also meets the mainlobe constraint
    scale = np.conj(response(original, small_problem.sources[0]))
    original = apply_weights(placements, [p.weight / scale for p in original])
    redesigned = apply_weights(placements, redesign_weights(placements, small_problem))

    def error(dipoles):
        return np.linalg.norm(responses(dipoles, small_problem.sources) - small_problem.reference)

    assert error(redesigned) <= error(original) + 1e-9


def test_masked_out_entries_are_zero(small_problem):
    mask = OrientationMask(np.array([1, 0, 1, 0, 1, 0, 0, 0, 1]))
    weights = redesign_masked([0.0, 1.0, 2.0], mask, small_problem)
    assert weights.shape == (9,)
    assert np.all(weights[mask.mask == 0] == 0)
    assert np.all(weights[mask.mask == 1] != 0)


def test_orientation_mask():
    mask = OrientationMask.all_orientations(2)
    assert mask.lifted.size == 12
    assert not mask.is_sst
    assert OrientationMask(np.array([0, 1, 0, 1, 0, 0])).is_sst
    with pytest.raises(ValueError):
        OrientationMask(np.array([1, 0, 1, 0]))
    with pytest.raises(ValueError):
        OrientationMask(np.array([2, 0, 0]))


def test_unreachable_mainlobe_raises(small_problem):
    # A z dipole has no response at broadside
    with pytest.raises(RankDeficientError):
        redesign_weights([DipolePlacement(1.0, Orientation.Z)], small_problem)
    with pytest.raises(RankDeficientError):
        redesign_masked([0.0], OrientationMask(np.zeros(3, dtype=int)), small_problem)


def test_redesign_requires_placements(small_problem):
    with pytest.raises(ValueError):
        redesign_weights([], small_problem)


def test_ula_positions():
    assert ula_positions(10.0, 0.5).size == 21
    assert_allclose(ula_positions(0.0, 0.5), [0.0])
    with pytest.raises(InvalidScenarioError):
        ula_positions(10.0, 0.3)
    with pytest.raises(InvalidScenarioError):
        ula_positions(10.0, 0.0)


def test_design_ula_keeps_one_orientation_per_location():
    scenario = small_scenario_with(aperture=2.0, grid_count=21)
    report = design_ula(scenario)

    dipoles = report.dipoles()
    assert report.method == "ula"
    assert report.status == "ok"
    assert [d.position for d in dipoles] == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])
    assert len(report.pre_redesign_placements) == 15
    assert report.iteration_count == 2
    assert response(dipoles, scenario.mainlobe) == pytest.approx(1.0, abs=1e-9)


def test_ula_pre_redesign_is_the_full_tripole_pass():
    scenario = small_scenario_with(aperture=2.0, grid_count=21)
    problem = sample_scenario(scenario)
    report = design_ula(scenario)

    pre = report.pre_redesign_dipoles()
    assert [int(d.orientation) for d in pre] == [0, 1, 2] * 5
    assert response(pre, scenario.mainlobe) == pytest.approx(1.0, abs=1e-9)
    # The pruned array is a subset of the tripole columns
    assert response_error(pre, problem) <= response_error(report.dipoles(), problem) + 1e-9
    assert np.isfinite(response_error(pre, problem))


def test_design_ula_single_location():
    scenario = small_scenario_with(aperture=0.0, grid_count=1)
    report = design_ula(scenario)
    assert len(report.placements) == 1
    assert response(report.dipoles(), scenario.mainlobe) == pytest.approx(1.0, abs=1e-9)
