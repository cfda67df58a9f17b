from dataclasses import FrozenInstanceError

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sssta.array_model import SourceState, steering_matrix
from sssta.errors import InvalidScenarioError
from sssta.problem_builder import (
    AngularRegion,
    group_index_map,
    lift,
    lift_matrix,
    lift_weights,
    mainlobe_centred_regions,
    reconstruct_complex,
    sample_scenario,
    split_complex,
)

from helpers import problem_with, random_complex, small_scenario_with


def test_sampling_puts_mainlobe_first():
    scn = small_scenario_with(
        sidelobe_regions=(AngularRegion(90.0, 20.0, 30.0, 5.0), AngularRegion(-90.0, 20.0, 30.0, 5.0)),
    )
    problem = sample_scenario(scn)
    assert problem.n_sources == 7
    assert problem.sources[0] == scn.mainlobe
    assert [s.theta_signed for s in problem.sources[1:]] == [20.0, 25.0, 30.0, -20.0, -25.0, -30.0]
    assert_allclose(problem.reference, [1, 0, 0, 0, 0, 0, 0])
    assert problem.steering.shape == (7, 3 * scn.grid_count)


def test_sampling_inherits_mainlobe_polarization():
    problem = sample_scenario(small_scenario_with())
    assert {(s.gamma, s.eta) for s in problem.sources} == {(45.0, 100.0)}


def test_sampling_drops_duplicate_directions():
    scn = small_scenario_with(
        sidelobe_regions=(AngularRegion(90.0, 20.0, 30.0, 5.0), AngularRegion(90.0, 30.0, 40.0, 5.0)),
    )
    problem = sample_scenario(scn)
    assert [s.theta for s in problem.sources[1:]] == [20.0, 25.0, 30.0, 35.0, 40.0]


def test_sampling_requires_a_region():
    with pytest.raises(InvalidScenarioError):
        sample_scenario(small_scenario_with(sidelobe_regions=()))


def test_mainlobe_inside_region_rejected():
    with pytest.raises(InvalidScenarioError, match="inside sidelobe region"):
        small_scenario_with(
            mainlobe=SourceState(25.0, 90.0, 45.0, 100.0),
            sidelobe_regions=(AngularRegion(90.0, 20.0, 30.0, 1.0),),
        )


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_alpha_outside_unit_interval_rejected(alpha):
    with pytest.raises(InvalidScenarioError):
        small_scenario_with(alpha=alpha)


def test_region_validation():
    with pytest.raises(InvalidScenarioError):
        AngularRegion(90.0, 40.0, 30.0)
    with pytest.raises(InvalidScenarioError):
        AngularRegion(90.0, 0.0, 30.0, 0.0)


def test_region_thetas_include_end():
    assert_allclose(AngularRegion(90.0, 10.0, 12.0, 0.5).thetas(), [10.0, 10.5, 11.0, 11.5, 12.0])
    assert AngularRegion(-90.0, 10.0, 30.0).signed_bounds() == (-30.0, -10.0)


def test_mainlobe_centred_regions():
    regions = mainlobe_centred_regions(60.0)
    assert [(r.phi, r.theta_start, r.theta_end) for r in regions] == [
        (90.0, 0.0, 50.0),
        (90.0, 70.0, 90.0),
        (-90.0, 0.0, 90.0),
    ]
    # Nothing fits below a mainlobe closer than the half-width to broadside
    assert [(r.phi, r.theta_start) for r in mainlobe_centred_regions(5.0)] == [(90.0, 15.0), (-90.0, 0.0)]


def test_full_grid_and_initial_spacing():
    scn = small_scenario_with(aperture=10.0, grid_count=301)
    assert scn.initial_spacing == pytest.approx(1.0 / 30.0)
    grid = scn.full_grid()
    assert grid.count == 301
    assert grid.end == pytest.approx(10.0)


def test_on_grid_keeps_sources(small_problem):
    grid = small_problem.grid.spanning(1.0, 3.0, 5)
    moved = small_problem.on_grid(grid, reference=np.zeros(small_problem.n_sources))
    assert moved.sources == small_problem.sources
    assert moved.n_groups == 15
    assert_allclose(moved.steering, steering_matrix(grid.positions, small_problem.sources))
    assert_allclose(moved.reference, 0.0)
    assert_allclose(small_problem.on_grid(grid).reference, small_problem.reference)


def test_lifted_matrix_reproduces_complex_response(rng):
    for _ in range(100):
        S = random_complex(rng, 4, 6)
        w = random_complex(rng, 6)
        assert_allclose(lift_matrix(S) @ lift_weights(w), split_complex(S @ np.conj(w)), atol=1e-10)


def test_lift_weights_round_trip(rng):
    w = random_complex(rng, 9)
    w_hat = lift_weights(w)
    assert_allclose(w_hat[0::3], np.abs(w))
    assert_allclose(reconstruct_complex(w_hat), w)


def test_lift_layout(rng, small_problem):
    S = random_complex(rng, 3, 6)
    problem = problem_with(small_problem, S, [1.0, 0.0, 0.0])
    lp = lift(problem, 0.4, delta=np.arange(1, 7))
    assert lp.S_hat.shape == (6, 18)
    assert_allclose(lp.S_hat[:, 0::3], 0.0)
    assert_allclose(lp.c_hat[0::3], np.arange(1, 7))
    assert_allclose(lp.c_hat[1::3], 0.0)
    assert_allclose(lp.p_r_hat, [1, 0, 0, 0, 0, 0])
    assert_allclose(lp.groups, group_index_map(6))
    assert lp.alpha == 0.4


def test_lift_rejects_bad_reweights(small_problem):
    with pytest.raises(InvalidScenarioError):
        lift(small_problem, 0.5, delta=np.ones(3))
    with pytest.raises(InvalidScenarioError):
        lift(small_problem, 0.5, delta=np.zeros(small_problem.n_groups))
    with pytest.raises(InvalidScenarioError):
        lift(small_problem, -0.5)


def test_design_scenario_is_frozen():
    scn = small_scenario_with()
    with pytest.raises(FrozenInstanceError):
        scn.alpha = 0.1  # type: ignore[misc]


def test_off_broadside_sampling_count():
    scn = small_scenario_with(
        mainlobe=SourceState(60.0, 90.0, 55.0, 100.0),
        sidelobe_regions=mainlobe_centred_regions(60.0),
        alpha=0.75,
    )
    # 1 mainlobe + 51 + 21 on phi=+90 + 91 on phi=-90
    assert sample_scenario(scn).n_sources == 164
