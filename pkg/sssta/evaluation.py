"""
SSSTA Designer - Evaluation

Performance measures of a finished design and its beam pattern on the
signed-theta axis (phi = +90 for theta >= 0, phi = -90 for theta < 0).
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .array_model import DipolePlacement, PolarizationConvention, SourceState, response, responses
from .errors import ZeroMainlobeError
from .logging_config import get_logger
from .problem_builder import AngularRegion, SampledProblem
from .schemas.report import DesignReport, Metrics

logger = get_logger("sssta.evaluation")

DEFAULT_PATTERN_STEP = 0.1
GAIN_FLOOR_DB = -300.0
DISPLACEMENT_TOL_DB = 1e-9


@dataclass(frozen=True)
class BeamPattern:
    """Normalized gain in dB over signed theta in degrees."""

    theta_signed: np.ndarray
    gain_db: np.ndarray

    @property
    def peak_theta(self) -> float:
        return float(self.theta_signed[int(np.argmax(self.gain_db))])

    @property
    def peak_db(self) -> float:
        return float(np.max(self.gain_db))

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.theta_signed.tolist(), self.gain_db.tolist()))


@dataclass(frozen=True)
class SidelobeLevel:
    theta_signed: float
    level_db: float
    is_peak: bool


def signed_thetas(step: float = DEFAULT_PATTERN_STEP) -> np.ndarray:
    """Signed theta samples from -90 to 90 inclusive."""
    if step <= 0:
        raise ValueError("pattern step must be positive")
    count = int(round(180.0 / step)) + 1
    return np.round(np.linspace(-90.0, 90.0, count), 9)


def signed_pattern_sources(thetas: Sequence[float], gamma: float, eta: float) -> list[SourceState]:
    """Sources on the signed axis sharing one polarization state."""
    return [
        SourceState(abs(float(t)), -90.0 if t < 0 else 90.0, gamma, eta)
        for t in thetas
    ]


def beam_pattern(
    placements: Sequence[DipolePlacement],
    mainlobe: SourceState,
    step: float = DEFAULT_PATTERN_STEP,
    convention: PolarizationConvention = "as-printed",
) -> BeamPattern:
    """
    Response magnitude over the signed-theta axis, relative to the mainlobe.

    Args:
        placements: Dipoles with stored weights
        mainlobe: Normalization direction; its polarization is used throughout
        step: Angular resolution in degrees
        convention: Polarization sign convention

    Returns:
        Beam pattern in dB, floored at -300 dB

    Raises:
        ZeroMainlobeError: Empty array or zero mainlobe response
    """
    if not placements:
        raise ZeroMainlobeError("cannot evaluate the pattern of an empty array")
    reference = abs(response(placements, mainlobe, convention))
    if reference == 0.0:
        raise ZeroMainlobeError(
            f"zero response at the mainlobe theta={mainlobe.theta}, phi={mainlobe.phi}"
        )

    thetas = signed_thetas(step)
    sources = signed_pattern_sources(thetas, mainlobe.gamma, mainlobe.eta)
    magnitude = np.abs(responses(placements, sources, convention)) / reference
    with np.errstate(divide="ignore"):
        gain = 20.0 * np.log10(magnitude)
    return BeamPattern(theta_signed=thetas, gain_db=np.maximum(gain, GAIN_FLOOR_DB))


def _in_regions(thetas: np.ndarray, regions: Sequence[AngularRegion]) -> np.ndarray:
    inside = np.zeros(thetas.size, dtype=bool)
    for region in regions:
        lo, hi = region.signed_bounds()
        # phi=-90 regions starting at theta 0 also own the signed 0 sample
        inside |= (thetas >= lo - 1e-9) & (thetas <= hi + 1e-9)
    return inside


def closest_sidelobe(
    pattern: BeamPattern,
    mainlobe_theta: float,
    sidelobe_regions: Sequence[AngularRegion],
) -> Optional[SidelobeLevel]:
    """
    Level of the sidelobe peak nearest the mainlobe.

    A peak is a sample strictly above both neighbours, the first and last
    pattern samples excluded, lying inside a sidelobe region. Equal
    distances go to the larger level. Without any peak the largest level
    inside the regions is returned with ``is_peak=False``.

    Args:
        pattern: Normalized pattern
        mainlobe_theta: Signed theta of the mainlobe in degrees
        sidelobe_regions: Regions defining where sidelobes are measured

    Returns:
        Sidelobe level, or None when the pattern misses every region
    """
    theta, gain = pattern.theta_signed, pattern.gain_db
    inside = _in_regions(theta, sidelobe_regions)
    if not inside.any():
        return None

    peaks = np.zeros(theta.size, dtype=bool)
    peaks[1:-1] = (gain[1:-1] > gain[:-2]) & (gain[1:-1] > gain[2:])
    candidates = np.flatnonzero(peaks & inside)
    if candidates.size == 0:
        idx = np.flatnonzero(inside)
        best = int(idx[np.argmax(gain[idx])])
        return SidelobeLevel(float(theta[best]), float(gain[best]), is_peak=False)

    distance = np.round(np.abs(theta[candidates] - mainlobe_theta), 9)
    # lexsort keys run last-to-first: nearest, then loudest
    order = np.lexsort((-gain[candidates], distance))
    best = int(candidates[order[0]])
    return SidelobeLevel(float(theta[best]), float(gain[best]), is_peak=True)


def response_error(placements: Sequence[DipolePlacement], problem: SampledProblem) -> float:
    """||p_r - S w||_2 over the design samples."""
    achieved = responses(placements, problem.sources, problem.scenario.convention)
    return float(np.linalg.norm(problem.reference - achieved))


def ula_count(aperture: float, spacing: float = 0.5) -> int:
    """Dipoles in a uniform array with the given spacing over the aperture."""
    return int(np.floor(aperture / spacing + 1e-9)) + 1


def percent_decrease(count: int, ula_count: int) -> int:
    return int(round(100.0 * (1.0 - count / ula_count)))


def compute_metrics(
    report: DesignReport,
    problem: SampledProblem,
    ula_count: int,
    wall_time: float = 0.0,
    pattern_step: float = DEFAULT_PATTERN_STEP,
    pattern: Optional[BeamPattern] = None,
) -> Metrics:
    """
    Performance measures of a finished design.

    Args:
        report: Report with at least one dipole
        problem: Problem the design was made for (original reference)
        ula_count: Dipole count of the comparison uniform array
        wall_time: Seconds spent designing
        pattern_step: Resolution used to locate the mainlobe and sidelobes
        pattern: Precomputed beam pattern of the report's placements

    Returns:
        Metrics
    """
    placements = report.dipoles()
    if not placements:
        raise ValueError("metrics require at least one dipole")

    positions = np.sort([p.position for p in placements])
    count = positions.size
    aperture = float(positions[-1] - positions[0])
    single = count == 1
    mean_sep = 0.0 if single else aperture / (count - 1)

    scenario = problem.scenario
    if pattern is None:
        pattern = beam_pattern(placements, scenario.mainlobe, pattern_step, scenario.convention)
    sidelobe = closest_sidelobe(pattern, scenario.mainlobe.theta_signed, scenario.sidelobe_regions)

    pre = report.pre_redesign_dipoles()
    metrics = Metrics(
        aperture=aperture,
        mean_adjacent_separation=mean_sep,
        single_dipole=single,
        dipole_count=count,
        percent_decrease=percent_decrease(count, ula_count),
        response_error=response_error(placements, problem),
        response_error_pre_redesign=response_error(pre, problem) if pre else None,
        closest_sidelobe_db=sidelobe.level_db if sidelobe else None,
        closest_sidelobe_is_peak=sidelobe.is_peak if sidelobe else False,
        achieved_mainlobe_deg=pattern.peak_theta,
        mainlobe_displaced=pattern.peak_db > DISPLACEMENT_TOL_DB,
        iterations=report.iteration_count,
        wall_time=wall_time,
    )
    logger.debug(
        "evaluation.metrics",
        dipoles=count,
        error=metrics.response_error,
        sidelobe_db=metrics.closest_sidelobe_db,
    )
    return metrics
