"""Builders shared by the test modules."""

from dataclasses import replace

import numpy as np

from sssta.array_model import SamplingGrid, SourceState
from sssta.problem_builder import AngularRegion, DesignScenario, SampledProblem


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def problem_with(problem: SampledProblem, steering: np.ndarray, reference: np.ndarray) -> SampledProblem:
    """A sampled problem carrying arbitrary steering and reference data."""
    n_locations = max(steering.shape[1] // 3, 1)
    return replace(
        problem,
        steering=np.asarray(steering, dtype=complex),
        reference=np.asarray(reference, dtype=complex),
        grid=SamplingGrid(0.0, 1.0, n_locations),
    )


def small_scenario_with(**overrides) -> DesignScenario:
    """Broadside scenario on a 3 wavelength aperture with coarse sidelobe sampling."""
    params = dict(
        mainlobe=SourceState(0.0, 90.0, 45.0, 100.0),
        sidelobe_regions=(
            AngularRegion(90.0, 20.0, 90.0, 5.0),
            AngularRegion(-90.0, 20.0, 90.0, 5.0),
        ),
        aperture=3.0,
        grid_count=31,
        alpha=0.5,
        min_separation=0.8,
    )
    params.update(overrides)
    return DesignScenario(**params)
