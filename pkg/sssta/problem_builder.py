"""
SSSTA Designer - Problem Builder

Turns a design scenario into a sampled reference response and steering
matrix, and lifts the complex group-sparse problem into real-valued SOCP
data.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .array_model import (
    PolarizationConvention,
    SamplingGrid,
    SourceState,
    steering_matrix,
)
from .errors import InvalidScenarioError
from .logging_config import get_logger

logger = get_logger("sssta.problem_builder")

# Exclusion half-width used when building sidelobe regions around a mainlobe
DEFAULT_MAINLOBE_HALFWIDTH = 10.0


# =============================================================================
# SCENARIO TYPES
# =============================================================================

@dataclass(frozen=True)
class AngularRegion:
    """Sidelobe samples theta_start..theta_end every ``step`` degrees on one phi half-plane."""

    phi: float
    theta_start: float
    theta_end: float
    step: float = 1.0

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise InvalidScenarioError(f"region step must be positive, got {self.step}")
        if not 0.0 <= self.theta_start <= self.theta_end <= 90.0:
            raise InvalidScenarioError(
                f"region [{self.theta_start}, {self.theta_end}] must satisfy 0 <= start <= end <= 90"
            )

    def thetas(self) -> np.ndarray:
        count = int(np.floor((self.theta_end - self.theta_start) / self.step + 1e-9)) + 1
        return np.round(self.theta_start + self.step * np.arange(count), 9)

    def contains(self, theta: float, phi: float) -> bool:
        return phi == self.phi and self.theta_start <= theta <= self.theta_end

    def signed_bounds(self) -> tuple[float, float]:
        """Region bounds on the signed-theta axis."""
        if self.phi < 0:
            return -self.theta_end, -self.theta_start
        return self.theta_start, self.theta_end


@dataclass(frozen=True)
class DesignScenario:
    """Everything that defines one design problem, independent of the method."""

    mainlobe: SourceState
    sidelobe_regions: tuple[AngularRegion, ...]
    aperture: float
    grid_count: int
    alpha: float
    min_separation: float = 0.8
    convention: PolarizationConvention = "as-printed"

    def __post_init__(self) -> None:
        if self.min_separation <= 0:
            raise InvalidScenarioError("min_separation must be positive")
        if self.aperture < 0:
            raise InvalidScenarioError("aperture must be non-negative")
        if self.grid_count < 1:
            raise InvalidScenarioError("grid_count must be positive")
        # The ideal reference has unit norm
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidScenarioError(f"alpha {self.alpha} outside [0, 1]")
        for region in self.sidelobe_regions:
            if region.contains(self.mainlobe.theta, self.mainlobe.phi):
                raise InvalidScenarioError(
                    f"mainlobe theta={self.mainlobe.theta} lies inside sidelobe region "
                    f"[{region.theta_start}, {region.theta_end}] at phi={region.phi}"
                )

    @property
    def gamma(self) -> float:
        return self.mainlobe.gamma

    @property
    def eta(self) -> float:
        return self.mainlobe.eta

    @property
    def initial_spacing(self) -> float:
        return self.aperture / (self.grid_count - 1) if self.grid_count > 1 else self.aperture

    def full_grid(self) -> SamplingGrid:
        return SamplingGrid.spanning(0.0, self.aperture, self.grid_count)


@dataclass(frozen=True)
class SampledProblem:
    """Sample directions, ideal reference and steering matrix over one grid."""

    scenario: DesignScenario
    sources: tuple[SourceState, ...]
    reference: np.ndarray
    steering: np.ndarray
    grid: SamplingGrid

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def n_groups(self) -> int:
        return 3 * self.grid.count

    def on_grid(self, grid: SamplingGrid, reference: Optional[np.ndarray] = None) -> "SampledProblem":
        """Same sources, re-sampled candidate positions and optionally a new reference."""
        return replace(
            self,
            grid=grid,
            steering=steering_matrix(grid.positions, self.sources, self.scenario.convention),
            reference=self.reference if reference is None else np.asarray(reference, dtype=complex),
        )


@dataclass(frozen=True)
class LiftedProblem:
    """
    Real-valued SOCP data.

    Each complex coefficient owns a variable triple ``(q_m, R(w_m), -I(w_m))``
    at columns ``groups[m]``; the q columns of ``S_hat`` are zero.
    """

    c_hat: np.ndarray
    S_hat: np.ndarray
    p_r_hat: np.ndarray
    alpha: float
    groups: np.ndarray = field(repr=False)

    @property
    def n_groups(self) -> int:
        return self.groups.shape[0]


# =============================================================================
# SAMPLING
# =============================================================================

def sample_scenario(scn: DesignScenario) -> SampledProblem:
    """
    Enumerate the mainlobe sample followed by every sidelobe sample.

    Args:
        scn: Validated design scenario

    Returns:
        Sampled problem over the full aperture grid

    Raises:
        InvalidScenarioError: No sidelobe regions, or mainlobe inside one
    """
    if not scn.sidelobe_regions:
        raise InvalidScenarioError("at least one sidelobe region is required")

    sources = [scn.mainlobe]
    seen = {(round(scn.mainlobe.theta, 9), scn.mainlobe.phi)}
    duplicates = 0
    for region in scn.sidelobe_regions:
        for theta in region.thetas():
            key = (float(theta), region.phi)
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            sources.append(SourceState(float(theta), region.phi, scn.gamma, scn.eta))

    if duplicates:
        logger.warning("sampling.duplicates_removed", count=duplicates)

    reference = np.zeros(len(sources), dtype=complex)
    reference[0] = 1.0
    grid = scn.full_grid()
    problem = SampledProblem(
        scenario=scn,
        sources=tuple(sources),
        reference=reference,
        steering=steering_matrix(grid.positions, sources, scn.convention),
        grid=grid,
    )
    logger.debug("sampling.done", n_sources=problem.n_sources, grid_count=grid.count)
    return problem


def mainlobe_centred_regions(
    theta_ml: float,
    halfwidth: float = DEFAULT_MAINLOBE_HALFWIDTH,
    step: float = 1.0,
) -> tuple[AngularRegion, ...]:
    """
    Sidelobe regions for a mainlobe at (theta_ml, phi=+90).

    The phi=+90 half-plane is sampled outside ``theta_ml +/- halfwidth``;
    the phi=-90 half-plane is sampled over [0, 90].
    """
    regions = []
    if theta_ml - halfwidth >= 0.0:
        regions.append(AngularRegion(90.0, 0.0, theta_ml - halfwidth, step))
    if theta_ml + halfwidth <= 90.0:
        regions.append(AngularRegion(90.0, theta_ml + halfwidth, 90.0, step))
    regions.append(AngularRegion(-90.0, 0.0, 90.0, step))
    return tuple(regions)


# =============================================================================
# LIFTING
# =============================================================================

def group_index_map(n_groups: int) -> np.ndarray:
    """Rows ``(q_m, re_m, im_m)`` of lifted-variable indices."""
    return np.arange(3 * n_groups).reshape(n_groups, 3)


def lift_matrix(S: np.ndarray) -> np.ndarray:
    """
    Real 2L x 9M matrix acting on lifted variables.

    Column ``re_m`` holds ``[R(s_m); I(s_m)]`` and column ``im_m`` holds
    ``[-I(s_m); R(s_m)]`` so that ``S_hat @ lift_weights(w)`` equals
    ``[R(S w*); I(S w*)]``.
    """
    L, n_groups = S.shape
    S_hat = np.zeros((2 * L, 3 * n_groups))
    S_hat[:L, 1::3] = S.real
    S_hat[L:, 1::3] = S.imag
    S_hat[:L, 2::3] = -S.imag
    S_hat[L:, 2::3] = S.real
    return S_hat


def split_complex(p: np.ndarray) -> np.ndarray:
    """[R(p); I(p)]"""
    p = np.asarray(p, dtype=complex)
    return np.concatenate([p.real, p.imag])


def lift(
    problem: SampledProblem,
    alpha: float,
    delta: Optional[Sequence[float]] = None,
) -> LiftedProblem:
    """
    Build real-valued SOCP data for the group-sparse design problem.

    Args:
        problem: Sampled problem
        alpha: Bound on ||p_r - S w||_2
        delta: Optional positive reweights, one per group

    Returns:
        Lifted problem with objective weights on the q variables

    Raises:
        InvalidScenarioError: Negative alpha, wrong delta length or non-positive delta
    """
    n_groups = problem.steering.shape[1]
    if alpha < 0:
        raise InvalidScenarioError(f"alpha must be non-negative, got {alpha}")

    if delta is None:
        delta = np.ones(n_groups)
    else:
        delta = np.asarray(delta, dtype=float)
        if delta.shape != (n_groups,):
            raise InvalidScenarioError(
                f"reweights have shape {delta.shape}, expected ({n_groups},)"
            )
        if np.any(delta <= 0):
            raise InvalidScenarioError("reweights must be strictly positive")

    c_hat = np.zeros(3 * n_groups)
    c_hat[0::3] = delta
    return LiftedProblem(
        c_hat=c_hat,
        S_hat=lift_matrix(problem.steering),
        p_r_hat=split_complex(problem.reference),
        alpha=float(alpha),
        groups=group_index_map(n_groups),
    )


def lift_weights(w: np.ndarray) -> np.ndarray:
    """Lifted vector ``[|w_m|, R(w_m), -I(w_m)]`` per group."""
    w = np.asarray(w, dtype=complex)
    w_hat = np.empty(3 * w.size)
    w_hat[0::3] = np.abs(w)
    w_hat[1::3] = w.real
    w_hat[2::3] = -w.imag
    return w_hat


def reconstruct_complex(w_hat: np.ndarray) -> np.ndarray:
    """Stored complex weights from a lifted vector."""
    w_hat = np.asarray(w_hat, dtype=float)
    return w_hat[1::3] - 1j * w_hat[2::3]
