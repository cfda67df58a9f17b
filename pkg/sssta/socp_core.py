"""
SSSTA Designer - SOCP Core

Solves the group-sparse second-order cone program

    minimize    c_hat^T w_hat
    subject to  ||p_r_hat - S_hat w_hat||_2 <= alpha
                ||(R(w_m), -I(w_m))||_2 <= q_m     for every group m

with cvxpy and the Clarabel primal-dual interior-point solver.
"""

from dataclasses import dataclass, replace
from typing import Literal

import cvxpy as cp
import numpy as np

from .errors import SolverError
from .logging_config import get_logger, log_timed
from .problem_builder import LiftedProblem, reconstruct_complex

logger = get_logger("sssta.socp_core")

SolveStatus = Literal["Optimal", "Infeasible", "MaxIterations"]

# Group norms below this are zero regardless of the relative threshold
ABSOLUTE_ZERO = 1e-9

# Tolerance floor of the retry after a solver crash
RELAXED_TOL = 1e-6

_STATUS_MAP: dict[str, SolveStatus] = {
    cp.OPTIMAL: "Optimal",
    cp.INFEASIBLE: "Infeasible",
    cp.INFEASIBLE_INACCURATE: "Infeasible",
    cp.OPTIMAL_INACCURATE: "MaxIterations",
    cp.USER_LIMIT: "MaxIterations",
}


@dataclass(frozen=True)
class SolverConfig:
    """Interior-point tolerances and the activity threshold."""

    feastol: float = 1e-8
    abstol: float = 1e-8
    reltol: float = 1e-8
    max_iterations: int = 200
    zero_threshold: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("feastol", "abstol", "reltol", "max_iterations", "zero_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def relaxed(self) -> "SolverConfig":
        """Looser tolerances and a doubled iteration cap for a second attempt."""
        return replace(
            self,
            feastol=max(self.feastol, RELAXED_TOL),
            abstol=max(self.abstol, RELAXED_TOL),
            reltol=max(self.reltol, RELAXED_TOL),
            max_iterations=2 * self.max_iterations,
        )


@dataclass(frozen=True)
class SocpSolution:
    """Lifted optimum, reconstructed weights and solver status."""

    w_hat: np.ndarray
    complex_weights: np.ndarray
    objective: float
    status: SolveStatus
    residual: float

    @property
    def group_norms(self) -> np.ndarray:
        return np.abs(self.complex_weights)


def _zero_solution(lp: LiftedProblem) -> SocpSolution:
    n = lp.c_hat.size
    return SocpSolution(
        w_hat=np.zeros(n),
        complex_weights=np.zeros(lp.n_groups, dtype=complex),
        objective=0.0,
        status="Optimal",
        residual=float(np.linalg.norm(lp.p_r_hat)),
    )


@log_timed("solver.solve")
def solve(lp: LiftedProblem, cfg: SolverConfig = SolverConfig()) -> SocpSolution:
    """
    Solve the lifted group-sparse SOCP.

    Args:
        lp: Lifted problem data
        cfg: Solver tolerances

    Returns:
        Solution with status Optimal, Infeasible or MaxIterations; a
        MaxIterations solution carries the solver's last iterate

    Raises:
        SolverError: The conic solver crashed twice, returned an unusable
            status, or stopped without any point
    """
    # The zero vector is feasible with objective 0, and c_hat >= 0
    if lp.alpha >= np.linalg.norm(lp.p_r_hat):
        logger.debug("solver.trivial_zero", alpha=lp.alpha)
        return _zero_solution(lp)

    n = lp.c_hat.size
    x = cp.Variable(n)
    q = x[lp.groups[:, 0]]
    pair = cp.vstack([x[lp.groups[:, 1]], x[lp.groups[:, 2]]])
    constraints = [
        cp.SOC(cp.Constant(lp.alpha), lp.p_r_hat - lp.S_hat @ x),
        cp.SOC(q, pair, axis=0),
    ]
    problem = cp.Problem(cp.Minimize(lp.c_hat @ x), constraints)

    try:
        _run_clarabel(problem, cfg)
    except cp.SolverError as first:
        relaxed = cfg.relaxed()
        logger.warning("solver.retry", error=str(first), feastol=relaxed.feastol)
        try:
            _run_clarabel(problem, relaxed)
        except cp.SolverError as e:
            raise SolverError(f"conic solver failed: {e}", status="error") from e

    status = _STATUS_MAP.get(problem.status)
    if status is None:
        raise SolverError(f"unexpected solver status {problem.status!r}", status=problem.status)

    if status == "Infeasible":
        logger.warning("solver.infeasible", alpha=lp.alpha, status=problem.status)
        return SocpSolution(
            w_hat=np.zeros(n),
            complex_weights=np.zeros(lp.n_groups, dtype=complex),
            objective=float("inf"),
            status="Infeasible",
            residual=float(np.linalg.norm(lp.p_r_hat)),
        )
    if x.value is None:
        raise SolverError(f"solver stopped with status {problem.status!r} and no point", status=status)

    w_hat = np.asarray(x.value, dtype=float)
    solution = SocpSolution(
        w_hat=w_hat,
        complex_weights=reconstruct_complex(w_hat),
        objective=float(lp.c_hat @ w_hat),
        status=status,
        residual=float(np.linalg.norm(lp.p_r_hat - lp.S_hat @ w_hat)),
    )
    logger.debug(
        "solver.solved",
        status=status,
        objective=solution.objective,
        residual=solution.residual,
        iterations=problem.solver_stats.num_iters,
    )
    return solution


def _run_clarabel(problem: cp.Problem, cfg: SolverConfig) -> None:
    problem.solve(
        solver=cp.CLARABEL,
        max_iter=cfg.max_iterations,
        tol_feas=cfg.feastol,
        tol_gap_abs=cfg.abstol,
        tol_gap_rel=cfg.reltol,
    )


def active_mask(weights: np.ndarray, zero_threshold: float) -> np.ndarray:
    """Boolean mask of groups whose magnitude clears the relative threshold."""
    magnitudes = np.abs(np.asarray(weights))
    if magnitudes.size == 0:
        return np.zeros(0, dtype=bool)
    peak = magnitudes.max()
    if peak <= ABSOLUTE_ZERO:
        return np.zeros(magnitudes.size, dtype=bool)
    return magnitudes > zero_threshold * peak


def active_groups(sol: SocpSolution, zero_threshold: float) -> list[tuple[int, int]]:
    """
    Active (location index, orientation index) pairs of a solution.

    Args:
        sol: Solver output
        zero_threshold: Fraction of the largest group norm below which a group is inactive

    Returns:
        Pairs ``(m // 3, m % 3)`` in group order
    """
    return [(int(m) // 3, int(m) % 3) for m in np.flatnonzero(active_mask(sol.complex_weights, zero_threshold))]
