"""
SSSTA Designer - Redesign

Fixed-beamformer weight redesign for given dipole locations and
orientations, and the half-wavelength uniform array used for comparison.

The redesign is the equality-constrained least-squares problem

    minimize    ||p_r_hat - S_tilde (mask o w_re)||_2
    subject to  R(mainlobe response) = 1,  I(mainlobe response) = 0

solved by the null-space method.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .array_model import DipolePlacement, Orientation, steering_matrix
from .errors import InvalidScenarioError, RankDeficientError
from .logging_config import get_logger
from .problem_builder import DesignScenario, SampledProblem, sample_scenario, split_complex
from .schemas.report import DesignReport, IterationRecord, records_from

logger = get_logger("sssta.redesign")

# Mainlobe sample is the first source of every sampled problem
MAINLOBE_ROW = 0
CONSTRAINT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class OrientationMask:
    """0/1 selector over the 3K interleaved (x, y, z) columns of K locations."""

    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask)
        if mask.ndim != 1 or mask.size % 3:
            raise ValueError("mask length must be a multiple of 3")
        if not np.all((mask == 0) | (mask == 1)):
            raise ValueError("mask entries must be 0 or 1")
        object.__setattr__(self, "mask", mask.astype(int))

    @classmethod
    def all_orientations(cls, n_locations: int) -> "OrientationMask":
        return cls(np.ones(3 * n_locations, dtype=int))

    @property
    def lifted(self) -> np.ndarray:
        """Mask duplicated over the real and imaginary halves."""
        return np.concatenate([self.mask, self.mask])

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def is_sst(self) -> bool:
        return bool(np.all(self.mask.reshape(-1, 3).sum(axis=1) <= 1))


def _constrained_least_squares(columns: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Effective coefficients v with S v = reference in the LS sense and (S v)[mainlobe] = 1."""
    n = columns.shape[1]
    S_tilde = np.block([[columns.real, -columns.imag], [columns.imag, columns.real]])
    target = split_complex(reference)
    L = columns.shape[0]
    constraint = S_tilde[[MAINLOBE_ROW, L + MAINLOBE_ROW], :]
    rhs = np.array([1.0, 0.0])

    scale = max(1.0, float(np.abs(constraint).max(initial=0.0)))
    rank = int(np.linalg.matrix_rank(constraint, tol=CONSTRAINT_RANK_TOL * scale))
    if rank < 2:
        raise RankDeficientError(rank)

    x_p = linalg.lstsq(constraint, rhs)[0]
    Z = linalg.null_space(constraint)
    if Z.shape[1]:
        y = linalg.lstsq(S_tilde @ Z, target - S_tilde @ x_p)[0]
        x = x_p + Z @ y
    else:
        x = x_p
    return x[:n] + 1j * x[n:]


def redesign_masked(
    positions: Sequence[float],
    mask: OrientationMask,
    problem: SampledProblem,
) -> np.ndarray:
    """
    Redesign weights over every masked-in column at the given locations.

    Args:
        positions: Locations in wavelengths
        mask: Orientation selector, 3 entries per location
        problem: Sampled problem supplying sources and the ideal reference

    Returns:
        Stored complex weights of length 3K, exactly zero where masked out

    Raises:
        RankDeficientError: The mainlobe cannot be reached with the selection
    """
    positions = np.asarray(positions, dtype=float)
    if mask.mask.size != 3 * positions.size:
        raise ValueError("mask does not match the number of locations")
    selected = mask.selected
    if selected.size == 0:
        raise RankDeficientError(0)

    S_full = steering_matrix(positions, problem.sources, problem.scenario.convention)
    v = _constrained_least_squares(S_full[:, selected], problem.reference)
    weights = np.zeros(3 * positions.size, dtype=complex)
    weights[selected] = v.conj()
    return weights


def redesign_weights(
    placements: Sequence[DipolePlacement],
    problem: SampledProblem,
) -> np.ndarray:
    """
    Optimal fixed-beamformer weights for the given placements.

    Args:
        placements: Dipoles whose positions and axes are kept
        problem: Sampled problem supplying sources and the ideal reference

    Returns:
        Stored complex weights aligned with ``placements``
    """
    if not placements:
        raise ValueError("redesign requires at least one placement")

    positions = sorted({p.position for p in placements})
    index = {pos: k for k, pos in enumerate(positions)}
    mask = np.zeros(3 * len(positions), dtype=int)
    columns = [3 * index[p.position] + int(p.orientation) for p in placements]
    mask[columns] = 1

    weights = redesign_masked(positions, OrientationMask(mask), problem)
    return weights[columns]


def apply_weights(placements: Sequence[DipolePlacement], weights: np.ndarray) -> list[DipolePlacement]:
    return [p.with_weight(w) for p, w in zip(placements, weights)]


def ula_positions(aperture: float, spacing: float) -> np.ndarray:
    """Uniform locations 0, spacing, ..., aperture."""
    if spacing <= 0:
        raise InvalidScenarioError("ULA spacing must be positive")
    ratio = aperture / spacing
    n_steps = int(round(ratio))
    if abs(ratio - n_steps) > 1e-9 * max(1.0, ratio):
        raise InvalidScenarioError(
            f"aperture {aperture} is not an integer multiple of spacing {spacing}"
        )
    return spacing * np.arange(n_steps + 1)


def design_ula(scenario: DesignScenario, spacing: float = 0.5) -> DesignReport:
    """
    Half-wavelength uniform tripole-derived array for comparison.

    Pass 1 redesigns all three orientations at every location, pass 2
    keeps the largest-magnitude orientation per location and redesigns
    again. The pass-1 tripole array is reported as the pre-redesign
    design.

    Args:
        scenario: Design scenario (aperture, sampling, polarization)
        spacing: Element spacing in wavelengths

    Returns:
        Report with one dipole per location
    """
    problem = sample_scenario(scenario)
    positions = ula_positions(scenario.aperture, spacing)

    full_mask = OrientationMask.all_orientations(positions.size)
    first_pass = redesign_masked(positions, full_mask, problem)

    magnitudes = np.abs(first_pass).reshape(-1, 3)
    # argmax keeps the lowest axis on ties
    keep = np.argmax(magnitudes, axis=1)
    pruned = np.zeros(3 * positions.size, dtype=int)
    pruned[3 * np.arange(positions.size) + keep] = 1
    second_pass = redesign_masked(positions, OrientationMask(pruned), problem)

    placements = [
        DipolePlacement(float(pos), Orientation(int(axis)), complex(second_pass[3 * k + axis]))
        for k, (pos, axis) in enumerate(zip(positions, keep))
    ]
    # Full tripole first pass, three dipoles per location
    pre_redesign = [
        DipolePlacement(float(pos), Orientation(axis), complex(first_pass[3 * k + axis]))
        for k, pos in enumerate(positions)
        for axis in range(3)
    ]
    logger.info("ula.designed", locations=positions.size, spacing=spacing)

    return DesignReport(
        method="ula",
        status="ok",
        placements=records_from(placements),
        pre_redesign_placements=records_from(pre_redesign),
        iterations=[
            IterationRecord(
                iteration=1, stage="ula-pass", solver_status="Optimal",
                active_groups=int(np.count_nonzero(first_pass)),
            ),
            IterationRecord(
                iteration=2, stage="ula-pass", solver_status="Optimal",
                active_groups=positions.size,
            ),
        ],
    )
