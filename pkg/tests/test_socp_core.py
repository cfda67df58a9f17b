from itertools import combinations

import cvxpy as cp
import numpy as np
import pytest
from numpy.testing import assert_allclose

from sssta import socp_core
from sssta.errors import SolverError
from sssta.problem_builder import lift
from sssta.socp_core import SocpSolution, SolverConfig, active_groups, active_mask, solve

from helpers import problem_with, random_complex


def _complex_oracle(S, p, alpha, delta):
    """Same problem stated directly over complex weights."""
    w = cp.Variable(S.shape[1], complex=True)
    problem = cp.Problem(
        cp.Minimize(cp.sum(cp.multiply(delta, cp.abs(w)))),
        [cp.norm(p - S @ cp.conj(w), 2) <= alpha],
    )
    problem.solve()
    return problem.value


def _min_residual(S, p):
    x, *_ = np.linalg.lstsq(S, p, rcond=None)
    return float(np.linalg.norm(p - S @ x))


def test_zero_is_optimal_when_alpha_covers_reference(small_problem):
    sol = solve(lift(small_problem, 1.0))
    assert sol.status == "Optimal"
    assert sol.objective == 0.0
    assert_allclose(sol.complex_weights, 0.0)
    assert sol.residual == pytest.approx(1.0)


def test_matches_complex_formulation(rng, small_problem):
    for _ in range(25):
        S = random_complex(rng, 5, 3)
        p = random_complex(rng, 5)
        delta = rng.uniform(0.5, 2.0, 3)
        r_min = _min_residual(S, p)
        alpha = r_min + 0.3 * (np.linalg.norm(p) - r_min)

        sol = solve(lift(problem_with(small_problem, S, p), alpha, delta))

        assert sol.status == "Optimal"
        assert sol.objective == pytest.approx(_complex_oracle(S, p, alpha, delta), rel=1e-5, abs=1e-7)
        residual = np.linalg.norm(p - S @ np.conj(sol.complex_weights))
        assert residual <= alpha + 1e-6
        assert sol.residual == pytest.approx(residual, abs=1e-8)


def test_group_bounds_are_tight(rng, small_problem):
    S = random_complex(rng, 6, 6)
    p = random_complex(rng, 6)
    r_min = _min_residual(S, p)
    sol = solve(lift(problem_with(small_problem, S, p), r_min + 0.5 * (np.linalg.norm(p) - r_min)))
    # At the optimum each q_m equals |w_m|
    assert_allclose(sol.w_hat[0::3], np.abs(sol.complex_weights), atol=1e-6)


def test_active_groups_use_relative_threshold():
    weights = np.array([1.0, 1e-8, 0.5j, 0.0, 2e-6, 0.0])
    sol = SocpSolution(
        w_hat=np.zeros(18),
        complex_weights=weights,
        objective=1.5,
        status="Optimal",
        residual=0.0,
    )
    assert active_groups(sol, 1e-6) == [(0, 0), (0, 2), (1, 1)]


def test_active_mask_of_all_zero_weights_is_empty():
    assert not active_mask(np.zeros(6), 1e-6).any()
    assert active_mask(np.array([]), 1e-6).size == 0


def test_solver_config_rejects_non_positive():
    with pytest.raises(ValueError):
        SolverConfig(feastol=0.0)


def _support_oracle(S, p, alpha, delta):
    """Smallest restricted objective over every support that can meet the bound."""
    n = S.shape[1]
    best = np.inf
    for size in range(1, n + 1):
        for support in combinations(range(n), size):
            cols = list(support)
            if _min_residual(S[:, cols], p) > alpha:
                continue
            best = min(best, _complex_oracle(S[:, cols], p, alpha, delta[cols]))
    return best


def _check_against_support_oracle(rng, small_problem):
    # 3 locations of 3 orientations observed at 5 samples
    S = random_complex(rng, 5, 9)
    p = random_complex(rng, 5)
    delta = rng.uniform(0.5, 2.0, 9)
    alpha = 0.3 * np.linalg.norm(p)

    sol = solve(lift(problem_with(small_problem, S, p), alpha, delta))

    assert sol.status == "Optimal"
    assert sol.objective == pytest.approx(_support_oracle(S, p, alpha, delta), rel=1e-5, abs=1e-7)
    assert np.linalg.norm(p - S @ np.conj(sol.complex_weights)) <= alpha + 1e-7


def test_matches_exhaustive_support_search(rng, small_problem):
    for _ in range(2):
        _check_against_support_oracle(rng, small_problem)


@pytest.mark.slow
def test_matches_exhaustive_support_search_many(rng, small_problem):
    for _ in range(25):
        _check_against_support_oracle(rng, small_problem)


def test_duality_gap_closes(rng, small_problem):
    S = random_complex(rng, 6, 9)
    p = random_complex(rng, 6)
    delta = rng.uniform(0.5, 2.0, 9)
    lp = lift(problem_with(small_problem, S, p), 0.4 * np.linalg.norm(p), delta)

    sol = solve(lp)

    # u = t r / ||r|| is dual feasible once every pair of S_hat^T u fits inside its delta
    r = lp.p_r_hat - lp.S_hat @ sol.w_hat
    u = r / np.linalg.norm(r)
    pairs = (lp.S_hat.T @ u)[lp.groups[:, 1:]]
    t = np.min(delta / np.linalg.norm(pairs, axis=1))
    dual = t * (lp.p_r_hat @ u - lp.alpha)

    assert dual <= sol.objective + 1e-8
    assert sol.objective - dual <= 1e-5 * max(1.0, sol.objective)


def test_scaling_reweights_scales_objective_only(rng, small_problem):
    S = random_complex(rng, 6, 9)
    p = random_complex(rng, 6)
    delta = rng.uniform(0.5, 2.0, 9)
    problem = problem_with(small_problem, S, p)
    alpha = 0.4 * np.linalg.norm(p)

    base = solve(lift(problem, alpha, delta))
    scaled = solve(lift(problem, alpha, 3.0 * delta))

    assert scaled.objective == pytest.approx(3.0 * base.objective, rel=1e-6)
    assert active_groups(scaled, 1e-4) == active_groups(base, 1e-4)
    assert_allclose(scaled.complex_weights, base.complex_weights, atol=1e-5)


def test_solver_crash_is_retried_with_relaxed_tolerances(rng, small_problem, monkeypatch):
    S = random_complex(rng, 5, 3)
    p = random_complex(rng, 5)
    real_run = socp_core._run_clarabel
    seen = []

    def crash_once(problem, cfg):
        seen.append(cfg)
        if len(seen) == 1:
            raise cp.SolverError("CLARABEL failed")
        real_run(problem, cfg)

    monkeypatch.setattr(socp_core, "_run_clarabel", crash_once)
    sol = solve(lift(problem_with(small_problem, S, p), 0.5 * np.linalg.norm(p)))

    assert sol.status == "Optimal"
    assert seen[1].feastol == socp_core.RELAXED_TOL
    assert seen[1].max_iterations == 2 * seen[0].max_iterations


def test_second_solver_crash_raises(rng, small_problem, monkeypatch):
    S = random_complex(rng, 5, 3)
    p = random_complex(rng, 5)

    def always_crash(problem, cfg):
        raise cp.SolverError("CLARABEL failed")

    monkeypatch.setattr(socp_core, "_run_clarabel", always_crash)
    with pytest.raises(SolverError) as excinfo:
        solve(lift(problem_with(small_problem, S, p), 0.5 * np.linalg.norm(p)))
    assert excinfo.value.status == "error"


def test_iteration_limit_without_point_raises(rng, small_problem, monkeypatch):
    S = random_complex(rng, 5, 3)
    p = random_complex(rng, 5)

    def stop_early(problem, cfg):
        problem._status = cp.USER_LIMIT

    monkeypatch.setattr(socp_core, "_run_clarabel", stop_early)
    with pytest.raises(SolverError) as excinfo:
        solve(lift(problem_with(small_problem, S, p), 0.5 * np.linalg.norm(p)))
    assert excinfo.value.status == "MaxIterations"
