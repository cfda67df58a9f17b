"""
SSSTA Designer - Placement Search

Outer loops that turn grid-dense solutions into SST-feasible placements:

- IMDSM: solve on the remaining aperture, merge the first cluster of
  too-close dipoles into one, fix it, re-sample beyond it, repeat.
  The CS variant solves the group-sparse SOCP, the BCS variant runs
  evidence maximization against the residual reference.
- AIRMS: a size-constraint-aware reweighted loop on the full grid.

Both finish with a fixed-beamformer redesign of the surviving dipoles.
"""

import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .array_model import (
    DipolePlacement,
    Orientation,
    PolarizationConvention,
    SamplingGrid,
    SourceState,
    placement_steering,
)
from .bayesian_engine import MtBcsConfig, StBcsConfig, mt_maximize, st_maximize
from .errors import FeasibilityError, RankDeficientError, SolverError
from .logging_config import get_logger
from .problem_builder import DesignScenario, SampledProblem, lift, sample_scenario
from .redesign import apply_weights, redesign_weights
from .reweighting import ReweightConfig, reweighted_loop
from .schemas.report import DesignReport, IterationRecord, PlacementRecord, records_from
from .socp_core import SolverConfig, active_mask, solve

logger = get_logger("sssta.placement_search")

ImdsmVariant = Literal["cs", "bcs"]
MergeRule = Literal["centroid", "snap"]
BcsEngine = Literal["multi-task", "single-task"]

SEPARATION_TOL = 1e-9


# =============================================================================
# CONFIGURATION AND STATE
# =============================================================================

@dataclass(frozen=True)
class ImdsmConfig:
    """Outer-loop switches shared by both IMDSM variants."""

    merge_rule: MergeRule = "centroid"
    cs_residual: bool = True
    bcs_engine: BcsEngine = "multi-task"
    redesign: bool = True
    # Relative to the largest group magnitude; smaller groups never join a cluster
    cluster_threshold: float = 1e-2

    def __post_init__(self) -> None:
        if not 0 < self.cluster_threshold < 1:
            raise ValueError("cluster_threshold must lie in (0, 1)")


@dataclass
class ImdsmState:
    """Committed dipoles and the part of the aperture still open."""

    fixed: list[DipolePlacement]
    remaining_origin: float
    remaining_aperture: float
    iteration: int
    residual_reference: np.ndarray
    records: list[IterationRecord] = field(default_factory=list)

    @classmethod
    def initial(cls, problem: SampledProblem) -> "ImdsmState":
        return cls(
            fixed=[],
            remaining_origin=0.0,
            remaining_aperture=problem.scenario.aperture,
            iteration=0,
            residual_reference=problem.reference.copy(),
        )

    def commit(self, dipole: DipolePlacement, d_a: float, aperture: float) -> None:
        self.fixed.append(dipole)
        self.remaining_origin = dipole.position + d_a
        self.remaining_aperture = aperture - self.remaining_origin


# =============================================================================
# IMDSM STEPS
# =============================================================================

def first_cluster(active: Sequence[DipolePlacement], d_a: float) -> list[DipolePlacement]:
    """
    Leftmost chain of active dipoles whose consecutive gaps are below ``d_a``.

    Co-located orientations have a zero gap and always join the chain.

    Args:
        active: Active dipoles with solver weights, in any order
        d_a: Minimum separation in wavelengths

    Returns:
        Cluster members in position order; empty when nothing is active
    """
    ordered = sorted(active, key=lambda p: (p.position, int(p.orientation)))
    if not ordered:
        return []

    cluster = [ordered[0]]
    for dipole in ordered[1:]:
        if dipole.position - cluster[-1].position < d_a - SEPARATION_TOL:
            cluster.append(dipole)
        else:
            break
    return cluster


def merge_and_fix(cluster: Sequence[DipolePlacement], rule: MergeRule = "centroid") -> DipolePlacement:
    """
    Collapse a cluster into a single dipole.

    The most significant member (largest |w|, first on ties) supplies the
    orientation and weight. ``centroid`` places the result at the
    magnitude-weighted mean position, ``snap`` at the most significant
    member's own position.

    Raises:
        ValueError: Empty cluster
    """
    if not cluster:
        raise ValueError("cannot merge an empty cluster")

    magnitudes = np.array([abs(p.weight) for p in cluster])
    keep = cluster[int(np.argmax(magnitudes))]
    if rule == "snap":
        return keep

    total = magnitudes.sum()
    if total <= 0:
        position = cluster[0].position
    else:
        position = float(np.dot(magnitudes, [p.position for p in cluster]) / total)
    return DipolePlacement(position, keep.orientation, keep.weight)


def resample(
    state: ImdsmState,
    M: int,
    d_a: float,
    aperture: float,
    spacing: float,
) -> Optional[SamplingGrid]:
    """
    Uniform grid of ``M`` points over what is left of the aperture.

    Args:
        state: Current search state
        M: Grid points per iteration
        d_a: Minimum separation in wavelengths
        aperture: Full aperture end in wavelengths
        spacing: Spacing of the initial full-aperture grid

    Returns:
        The next grid, or None once the remaining span is shorter than
        ``spacing``
    """
    if not state.fixed:
        return SamplingGrid.spanning(0.0, aperture, M)
    start = state.remaining_origin
    if aperture - start < spacing - SEPARATION_TOL:
        return None
    return SamplingGrid.spanning(start, aperture, M)


def residual_reference(
    prev_reference: np.ndarray,
    fixed_new: DipolePlacement,
    sources: Sequence[SourceState],
    convention: PolarizationConvention = "as-printed",
) -> np.ndarray:
    """Previous reference minus the response of the newly fixed dipole."""
    column = placement_steering([fixed_new], sources, convention)[:, 0]
    return np.asarray(prev_reference, dtype=complex) - column * np.conj(fixed_new.weight)


def _active_dipoles(grid: SamplingGrid, weights: np.ndarray, zero_threshold: float) -> list[DipolePlacement]:
    positions = grid.positions
    return [
        DipolePlacement(float(positions[m // 3]), Orientation(m % 3), complex(weights[m]))
        for m in np.flatnonzero(active_mask(weights, zero_threshold))
    ]


def _finalize(
    placements: list[DipolePlacement],
    problem: SampledProblem,
    redesign: bool,
) -> tuple[list[DipolePlacement], Optional[str]]:
    """Redesigned placements, or the solver weights with a note when redesign is impossible."""
    if not redesign:
        return placements, None
    try:
        return apply_weights(placements, redesign_weights(placements, problem)), None
    except RankDeficientError as e:
        logger.warning("redesign.skipped", reason=str(e))
        return placements, f"redesign skipped: {e}"


# =============================================================================
# IMDSM
# =============================================================================

def run_imdsm(
    scenario: DesignScenario,
    variant: ImdsmVariant,
    cfg: ImdsmConfig = ImdsmConfig(),
    solver_cfg: SolverConfig = SolverConfig(),
    mt_cfg: MtBcsConfig = MtBcsConfig(),
    st_cfg: StBcsConfig = StBcsConfig(),
) -> DesignReport:
    """
    Iterative minimum distance sampling.

    Args:
        scenario: Design scenario
        variant: ``cs`` (group-sparse SOCP) or ``bcs`` (evidence maximization)
        cfg: Merge rule, residual policy, BCS engine and redesign switch
        solver_cfg: SOCP tolerances and activity threshold
        mt_cfg: Multi-task BCS settings
        st_cfg: Single-task BCS settings

    Returns:
        Report without metrics; ``solver_failure`` carries the partial log
    """
    problem = sample_scenario(scenario)
    d_a = scenario.min_separation
    aperture = scenario.aperture
    use_residual = variant == "bcs" or cfg.cs_residual
    method = "bcs-imdsm" if variant == "bcs" else "cs-imdsm"
    state = ImdsmState.initial(problem)
    bcs_settings: Optional[dict] = None
    if variant == "bcs":
        bcs_settings = _bcs_settings(cfg.bcs_engine, mt_cfg, st_cfg, problem)

    while True:
        grid = resample(state, scenario.grid_count, d_a, aperture, scenario.initial_spacing)
        if grid is None:
            break
        sub = problem.on_grid(grid, state.residual_reference if use_residual else None)
        state.iteration += 1

        evidence = None
        try:
            if variant == "cs":
                solution = solve(lift(sub, scenario.alpha), solver_cfg)
                weights, solver_status = solution.complex_weights, solution.status
            elif cfg.bcs_engine == "single-task":
                weights, st_state = st_maximize(sub, st_cfg)
                solver_status = "Converged" if st_state.converged else "MaxIterations"
                evidence = st_state.likelihood_history[-1] if st_state.likelihood_history else None
            else:
                weights, mt_state = mt_maximize(sub, mt_cfg)
                solver_status = "Converged" if mt_state.converged else "MaxIterations"
                evidence = mt_state.evidence_history[-1] if mt_state.evidence_history else None
        except SolverError as e:
            logger.error("imdsm.solver_failed", iteration=state.iteration, error=str(e))
            return DesignReport(
                method=method,
                status="solver_failure",
                message=str(e),
                placements=records_from(state.fixed),
                pre_redesign_placements=records_from(state.fixed),
                iterations=state.records,
                bcs_settings=bcs_settings,
            )

        active = _active_dipoles(grid, weights, cfg.cluster_threshold)
        record = IterationRecord(
            iteration=state.iteration,
            stage="imdsm",
            solver_status=solver_status,
            active_groups=len(active),
            grid_origin=grid.origin,
            grid_span=grid.end - grid.origin,
            grid_count=grid.count,
            evidence=evidence,
        )
        if solver_status == "Infeasible" or not active:
            state.records.append(record)
            logger.info("imdsm.no_active", iteration=state.iteration, solver_status=solver_status)
            break

        cluster = first_cluster(active, d_a)
        merged = merge_and_fix(cluster, cfg.merge_rule)
        position = min(max(merged.position, grid.origin), aperture)
        merged = DipolePlacement(position, merged.orientation, merged.weight)

        if use_residual:
            state.residual_reference = residual_reference(
                state.residual_reference, merged, problem.sources, scenario.convention
            )
        state.commit(merged, d_a, aperture)
        record.cluster = records_from(cluster)
        record.merged = PlacementRecord.from_placement(merged)
        state.records.append(record)
        logger.info(
            "imdsm.iteration",
            iteration=state.iteration,
            grid_origin=round(grid.origin, 6),
            active=len(active),
            cluster=len(cluster),
            fixed_at=round(merged.position, 6),
            orientation=merged.orientation.name,
        )

    if not state.fixed:
        logger.info("imdsm.empty", iterations=state.iteration)
        return DesignReport(
            method=method,
            status="empty",
            message="no dipole survived",
            iterations=state.records,
            bcs_settings=bcs_settings,
        )

    placements, message = _finalize(state.fixed, problem, cfg.redesign)
    logger.info("imdsm.finished", variant=variant, dipoles=len(placements), iterations=state.iteration)
    return DesignReport(
        method=method,
        status="ok",
        message=message,
        placements=records_from(placements),
        pre_redesign_placements=records_from(state.fixed),
        iterations=state.records,
        bcs_settings=bcs_settings,
    )


def _bcs_settings(
    engine: BcsEngine,
    mt_cfg: MtBcsConfig,
    st_cfg: StBcsConfig,
    problem: SampledProblem,
) -> dict:
    alpha, n_sources = problem.scenario.alpha, problem.n_sources
    if engine == "single-task":
        return {
            "engine": engine,
            "noise_variance": st_cfg.resolve_noise_variance(alpha, n_sources),
            "learn_noise": st_cfg.learn_noise,
            "beta_st": [st_cfg.beta_st3, st_cfg.beta_st4, st_cfg.beta_st5, st_cfg.beta_st6],
            "max_em_iterations": st_cfg.max_em_iterations,
            "prune_threshold": st_cfg.prune_threshold,
        }
    return {
        "engine": engine,
        "noise_variance": mt_cfg.resolve_noise_variance(alpha, n_sources),
        "beta_mt1": mt_cfg.beta_mt1,
        "beta_mt2": mt_cfg.beta_mt2,
        "evidence_form": mt_cfg.evidence_form,
        "noise_floor_stop": mt_cfg.noise_floor_stop,
        "max_em_iterations": mt_cfg.max_em_iterations,
        "prune_threshold": mt_cfg.prune_threshold,
    }


def imdsm_iteration_bound(aperture: float, d_a: float) -> int:
    return math.ceil(aperture / d_a - SEPARATION_TOL) + 1


# =============================================================================
# AIRMS
# =============================================================================

def run_airms(
    scenario: DesignScenario,
    cfg: ReweightConfig = ReweightConfig(),
    solver_cfg: SolverConfig = SolverConfig(),
    redesign: bool = True,
) -> DesignReport:
    """
    Altered iterative reweighted minimization on the full aperture grid.

    Args:
        scenario: Design scenario
        cfg: Reweighting caps, epsilon and first-location rule
        solver_cfg: SOCP tolerances and activity threshold
        redesign: Whether the compliant solution is redesigned

    Returns:
        Report without metrics; ``no_solution`` when the cap is reached
    """
    problem = sample_scenario(scenario)
    try:
        solution, state = reweighted_loop(
            problem,
            scenario.alpha,
            cfg=cfg,
            solver_cfg=solver_cfg,
            rule="airms",
            d_a=scenario.min_separation,
        )
    except SolverError as e:
        logger.error("airms.solver_failed", error=str(e))
        return DesignReport(method="airms", status="solver_failure", message=str(e))

    records = [
        IterationRecord(
            iteration=k + 1,
            stage="reweight",
            solver_status=status,
            active_groups=l0,
            l0=l0,
            objective=objective if math.isfinite(objective) else None,
            compliant=(k + 1 == state.iteration and state.status == "compliant"),
        )
        for k, (l0, objective, status) in enumerate(
            zip(state.l0_history, state.objective_history, state.status_history)
        )
    ]

    if state.status == "iteration_cap":
        logger.info("airms.no_solution", iterations=state.iteration)
        return DesignReport(
            method="airms",
            status="no_solution",
            message=f"no size-compliant solution within {state.iteration} iterations",
            iterations=records,
        )
    if state.status == "solver_failure":
        return DesignReport(
            method="airms",
            status="solver_failure",
            message=state.message,
            iterations=records,
        )

    active = _active_dipoles(problem.grid, solution.complex_weights, solver_cfg.zero_threshold)
    if not active:
        return DesignReport(method="airms", status="empty", message="no dipole survived", iterations=records)

    placements, message = _finalize(active, problem, redesign)
    logger.info("airms.finished", dipoles=len(placements), iterations=state.iteration)
    return DesignReport(
        method="airms",
        status="ok",
        message=message,
        placements=records_from(placements),
        pre_redesign_placements=records_from(active),
        iterations=records,
    )


# =============================================================================
# FEASIBILITY
# =============================================================================

def sst_violations(placements: Sequence[DipolePlacement], d_a: float, aperture: float) -> list[str]:
    """Human-readable breaches of the separation, co-location and aperture rules."""
    violations = []
    positions = sorted(p.position for p in placements)
    for p in positions:
        if p < -SEPARATION_TOL or p > aperture + SEPARATION_TOL:
            violations.append(f"position {p:.6g} outside [0, {aperture:.6g}]")
    for left, right in zip(positions, positions[1:]):
        if right - left < SEPARATION_TOL:
            violations.append(f"more than one dipole at {left:.6g}")
        elif right - left < d_a - SEPARATION_TOL:
            violations.append(f"gap {right - left:.6g} between {left:.6g} and {right:.6g} below {d_a:.6g}")
    return violations


def check_sst_feasibility(report: DesignReport, d_a: float, aperture: float) -> None:
    """
    Verify a report's final placements before it is persisted.

    Raises:
        FeasibilityError: Any separation, co-location or aperture breach
    """
    violations = sst_violations(report.dipoles(), d_a, aperture)
    if violations:
        raise FeasibilityError(violations)
