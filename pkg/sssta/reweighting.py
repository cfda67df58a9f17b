"""
SSSTA Designer - Reweighting

Iteratively reweighted group-l1 minimization in two flavours:

- standard: delta_m = 1 / (|w_m| + eps), stopped when the active count
  has been equal for three consecutive solves;
- AIRMS: groups whose location breaks the minimum-separation or
  one-dipole-per-location rule get delta_m = 1 / eps, stopped as soon as
  the active set complies.
"""

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from .errors import SolverError
from .logging_config import get_logger
from .problem_builder import SampledProblem, lift
from .socp_core import SocpSolution, SolverConfig, active_mask, solve

logger = get_logger("sssta.reweighting")

ReweightRule = Literal["standard", "airms"]
FirstLocationRule = Literal["first-active", "grid-index"]
LoopStatus = Literal["converged", "compliant", "iteration_cap", "solver_failure"]

_SEPARATION_TOL = 1e-9


@dataclass(frozen=True)
class ReweightConfig:
    """Loop caps and epsilon selection."""

    epsilon: Optional[float] = None
    epsilon_scale: float = 1e-3
    max_iterations: int = 20
    airms_max_iterations: int = 10
    first_location_rule: FirstLocationRule = "first-active"

    def resolve_epsilon(self, initial_weights: np.ndarray) -> float:
        """Explicit epsilon, else a fraction of the largest initial group magnitude."""
        if self.epsilon is not None:
            return self.epsilon
        peak = float(np.max(np.abs(initial_weights))) if initial_weights.size else 0.0
        return self.epsilon_scale * peak if peak > 0 else self.epsilon_scale


@dataclass
class ReweightState:
    """
    History of a reweighted loop; ``iteration`` counts solves performed.

    ``best_iteration`` is the 1-based solve whose weights were returned.
    """

    iteration: int
    delta: np.ndarray
    previous_weights: np.ndarray
    epsilon: float
    l0_history: list[int] = field(default_factory=list)
    objective_history: list[float] = field(default_factory=list)
    status_history: list[str] = field(default_factory=list)
    status: LoopStatus = "converged"
    best_iteration: int = 1
    message: Optional[str] = None


def standard_reweights(prev: np.ndarray, epsilon: float) -> np.ndarray:
    """
    Standard reweights (|w_m| + eps)^-1.

    Args:
        prev: Previous complex weights, one per group
        epsilon: Stabilizer, > 0

    Returns:
        Positive real reweights
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return 1.0 / (np.abs(np.asarray(prev)) + epsilon)


def _accepted_groups(
    magnitudes: np.ndarray,
    positions: np.ndarray,
    active: np.ndarray,
    d_a: float,
    first_location_rule: FirstLocationRule,
) -> tuple[set[int], set[int]]:
    """Scan active locations left to right; return (accepted, penalized) group indices."""
    accepted: set[int] = set()
    penalized: set[int] = set()
    last_accepted: Optional[float] = None

    # Literal reading: group 0 always keeps the standard reweight and anchors the scan
    anchored = first_location_rule == "grid-index" and bool(active[0])
    if anchored:
        accepted.add(0)
        last_accepted = positions[0]

    active_locations = sorted({int(m) // 3 for m in np.flatnonzero(active)}, key=lambda k: positions[k])
    for loc in active_locations:
        members = [3 * loc + f for f in range(3) if active[3 * loc + f] and not (anchored and 3 * loc + f == 0)]
        if not members:
            continue
        # argmax keeps the lowest axis on ties
        keep = members[int(np.argmax(magnitudes[members]))]
        penalized.update(m for m in members if m != keep)

        if last_accepted is None or positions[loc] - last_accepted >= d_a - _SEPARATION_TOL:
            accepted.add(keep)
            last_accepted = positions[loc]
        else:
            penalized.add(keep)

    return accepted, penalized


def airms_reweights(
    prev: np.ndarray,
    placements_prev: Sequence[float],
    epsilon: float,
    d_a: float,
    zero_threshold: float = 1e-6,
    first_location_rule: FirstLocationRule = "first-active",
) -> np.ndarray:
    """
    Size-constraint-aware reweights.

    Active groups are scanned in increasing position. At each location the
    largest-magnitude orientation is the candidate and the others are
    co-located breaches. A candidate closer than ``d_a`` to the last
    accepted location is a separation breach. Breaches get 1/eps, every
    other group gets the standard reweight.

    Args:
        prev: Previous complex weights, one per group (3 per location)
        placements_prev: Grid positions, one per location
        epsilon: Stabilizer, > 0
        d_a: Minimum separation in wavelengths
        zero_threshold: Relative activity threshold
        first_location_rule: ``first-active`` accepts the strongest
            orientation of the leftmost active location; ``grid-index``
            always accepts group 0 (location 0, x) when it is active and
            scans every other group against it

    Returns:
        Positive real reweights
    """
    if d_a <= 0:
        raise ValueError("d_a must be positive")
    delta = standard_reweights(prev, epsilon)
    magnitudes = np.abs(np.asarray(prev))
    positions = np.asarray(placements_prev, dtype=float)
    active = active_mask(prev, zero_threshold)
    _, penalized = _accepted_groups(magnitudes, positions, active, d_a, first_location_rule)
    for m in penalized:
        delta[m] = 1.0 / epsilon
    return delta


def is_size_compliant(
    weights: np.ndarray,
    positions: Sequence[float],
    d_a: float,
    zero_threshold: float = 1e-6,
) -> bool:
    """True when active groups use one orientation per location and keep ``d_a`` apart."""
    active = active_mask(weights, zero_threshold)
    magnitudes = np.abs(np.asarray(weights))
    _, penalized = _accepted_groups(
        magnitudes, np.asarray(positions, dtype=float), active, d_a, "first-active"
    )
    return not penalized


def _three_stable(history: list[int]) -> bool:
    return len(history) >= 3 and history[-1] == history[-2] == history[-3]


def _group_l1(solution: SocpSolution) -> float:
    """Unweighted sum of group magnitudes, comparable across reweighted solves."""
    if solution.status == "Infeasible":
        return float("inf")
    return float(np.sum(np.abs(solution.complex_weights)))


def reweighted_loop(
    problem: SampledProblem,
    alpha: float,
    epsilon: Optional[float] = None,
    cfg: ReweightConfig = ReweightConfig(),
    solver_cfg: SolverConfig = SolverConfig(),
    rule: ReweightRule = "standard",
    d_a: Optional[float] = None,
) -> tuple[SocpSolution, ReweightState]:
    """
    Run the reweighted group-l1 loop.

    When the iteration cap is reached or a later solve fails, the iterate
    with the smallest unweighted group-l1 norm is returned.

    Args:
        problem: Sampled problem over the candidate grid
        alpha: Response error bound
        epsilon: Stabilizer; resolved from ``cfg`` when None
        cfg: Loop caps and epsilon policy
        solver_cfg: SOCP tolerances
        rule: ``standard`` or ``airms``
        d_a: Minimum separation, required for ``airms``

    Returns:
        Returned solution and loop history

    Raises:
        SolverError: The first solve returned no point
    """
    if rule == "airms" and d_a is None:
        raise ValueError("airms rule requires d_a")

    cap = cfg.airms_max_iterations if rule == "airms" else cfg.max_iterations
    positions = problem.grid.positions
    zt = solver_cfg.zero_threshold

    solution = solve(lift(problem, alpha), solver_cfg)
    l0 = int(active_mask(solution.complex_weights, zt).sum())
    eps = epsilon if epsilon is not None else cfg.resolve_epsilon(solution.complex_weights)
    state = ReweightState(
        iteration=1,
        delta=np.ones(problem.n_groups),
        previous_weights=solution.complex_weights,
        epsilon=eps,
        l0_history=[l0],
        objective_history=[solution.objective],
        status_history=[solution.status],
    )
    best, best_l1 = solution, _group_l1(solution)
    logger.debug("reweight.iteration", rule=rule, iteration=1, l0=l0)

    while True:
        if solution.status == "Infeasible":
            state.status = "solver_failure"
            state.message = "reweighted problem is infeasible"
            break
        if l0 == 0:
            state.status = "compliant" if rule == "airms" else "converged"
            break
        if rule == "airms" and is_size_compliant(solution.complex_weights, positions, d_a, zt):
            state.status = "compliant"
            break
        if rule == "standard" and _three_stable(state.l0_history):
            state.status = "converged"
            break
        if state.iteration >= cap:
            state.status = "iteration_cap"
            break

        if rule == "airms":
            delta = airms_reweights(
                solution.complex_weights, positions, eps, d_a, zt, cfg.first_location_rule
            )
        else:
            delta = standard_reweights(solution.complex_weights, eps)

        try:
            solution = solve(lift(problem, alpha, delta), solver_cfg)
        except SolverError as e:
            logger.error("reweight.solver_failed", rule=rule, iteration=state.iteration + 1, error=str(e))
            state.status = "solver_failure"
            state.message = str(e)
            break
        l0 = int(active_mask(solution.complex_weights, zt).sum())
        state.iteration += 1
        state.delta = delta
        state.previous_weights = solution.complex_weights
        state.l0_history.append(l0)
        state.objective_history.append(solution.objective)
        state.status_history.append(solution.status)
        l1 = _group_l1(solution)
        if l1 < best_l1:
            best, best_l1 = solution, l1
            state.best_iteration = state.iteration
        logger.debug("reweight.iteration", rule=rule, iteration=state.iteration, l0=l0)

    if state.status in ("converged", "compliant"):
        best = solution
        state.best_iteration = state.iteration

    logger.info(
        "reweight.finished",
        rule=rule,
        status=state.status,
        iterations=state.iteration,
        best_iteration=state.best_iteration,
        l0=state.l0_history[state.best_iteration - 1],
    )
    return best, state
