"""
SSSTA Designer - Bayesian Engine

Sparse Bayesian weight estimation by type-II maximum likelihood.

Multi-task (MT-BCS): the real and imaginary parts of the reference are two
tasks sharing one hyperparameter per basis over the real dictionary
S_breve = [R(S); I(S)]. The noise precision is integrated out under a
Gamma prior, so the evidence is

    L(a) = -1/2 sum_F [ log|C| + (B + 2 beta1) log(p_F^T C^-1 p_F + 2 beta2) ]
    C    = I + S_breve A^-1 S_breve^T

with B the number of bases. The reference is split as p = p_R + j p_I, and
only splits with p_R = S w_R and p_I = S w_I are exactly representable, so
the split is a latent quantity: it starts as (R(p), I(p)) and is
re-optimized against the evidence between hyperparameter updates.

Single-task (ST-BCS): one task over S_tilde = [R(S) -I(S); I(S) R(S)] with
an explicit noise variance.

Both engines maximize the evidence one basis at a time (add, re-estimate
or delete, whichever gains the most), using leave-one-out statistics
computed from the current posterior.
"""

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy import linalg

from .errors import BayesianEngineError
from .logging_config import get_logger, log_timed
from .problem_builder import SampledProblem

logger = get_logger("sssta.bayesian_engine")

EvidenceForm = Literal["standard", "printed"]

_TINY = 1e-300
_MONOTONE_TOL = 1e-9
# alpha - S is floored at this fraction of alpha
_LOO_FLOOR = 1e-12


# =============================================================================
# CONFIGURATION AND STATE
# =============================================================================

def default_noise_variance(alpha: float, n_sources: int) -> float:
    """Noise variance matching the CS error budget: (alpha / sqrt(2L))^2."""
    return alpha**2 / (2 * n_sources)


@dataclass(frozen=True)
class MtBcsConfig:
    """Hyperprior parameters and loop controls for MT-BCS."""

    beta_mt1: float = 1e-2
    beta_mt2: float = 1e-2
    noise_variance: Optional[float] = None
    max_em_iterations: int = 1000
    hyper_tol: float = 1e-6
    prune_threshold: float = 1e12
    evidence_form: EvidenceForm = "standard"
    noise_floor_stop: bool = True

    def __post_init__(self) -> None:
        for name in ("beta_mt1", "beta_mt2", "max_em_iterations", "hyper_tol", "prune_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.noise_variance is not None and self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")

    def resolve_noise_variance(self, alpha: float, n_sources: int) -> float:
        if self.noise_variance is not None:
            return self.noise_variance
        return default_noise_variance(alpha, n_sources)


@dataclass(frozen=True)
class StBcsConfig:
    """Loop controls and Gamma hyperpriors for ST-BCS."""

    noise_variance: Optional[float] = None
    max_em_iterations: int = 1000
    hyper_tol: float = 1e-6
    prune_threshold: float = 1e12
    learn_noise: bool = True
    beta_st3: float = 0.0
    beta_st4: float = 0.0
    beta_st5: float = 0.0
    beta_st6: float = 0.0

    def resolve_noise_variance(self, alpha: float, n_sources: int) -> float:
        if self.noise_variance is not None:
            return self.noise_variance
        return default_noise_variance(alpha, n_sources)


@dataclass
class EvidenceState:
    """MT-BCS hyperparameters (inf = pruned) and posterior."""

    a: np.ndarray
    mean_R: np.ndarray
    mean_I: np.ndarray
    covariance: np.ndarray
    active_set: list[int]
    noise_variance: float
    evidence_history: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    monotonicity_violations: int = 0
    printed_evidence: Optional[float] = None
    targets: Optional[np.ndarray] = None


@dataclass
class StBcsState:
    """ST-BCS hyperparameters over the 6M block layout, noise and posterior."""

    a_tilde: np.ndarray
    sigma2: float
    mean: np.ndarray
    covariance: np.ndarray
    active_set: list[int]
    beta_st: tuple[float, float, float, float]
    likelihood_history: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


# =============================================================================
# REAL-VALUED DICTIONARIES
# =============================================================================

def breve_matrix(S: np.ndarray) -> np.ndarray:
    """[R(S); I(S)]"""
    return np.vstack([S.real, S.imag])


def mt_targets(reference: np.ndarray) -> np.ndarray:
    """Initial task targets as columns: [R(p_R); I(p_R)] and [R(p_I); I(p_I)] with p_R = R(p), p_I = I(p)."""
    reference = np.asarray(reference, dtype=complex)
    zeros = np.zeros(reference.size)
    return np.column_stack(
        [np.concatenate([reference.real, zeros]), np.concatenate([reference.imag, zeros])]
    )


def rotate(v: np.ndarray) -> np.ndarray:
    """[R(v); I(v)] -> [R(jv); I(jv)]"""
    n = v.shape[0] // 2
    return np.concatenate([-v[n:], v[:n]])


def unrotate(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rotate`."""
    n = v.shape[0] // 2
    return np.concatenate([v[n:], -v[:n]])


def _rotate_congruence(M: np.ndarray) -> np.ndarray:
    """J M J^T for the block rotation J of :func:`rotate`."""
    n = M.shape[0] // 2
    return np.block([[M[n:, n:], -M[n:, :n]], [-M[:n, n:], M[:n, :n]]])


def combine_targets(targets: np.ndarray) -> np.ndarray:
    """[R(p); I(p)] of the reference a two-task split represents: p_hat_R + J p_hat_I."""
    return targets[:, 0] + rotate(targets[:, 1])


def refine_split(
    S_breve: np.ndarray,
    targets: np.ndarray,
    a: np.ndarray,
    cfg: MtBcsConfig = MtBcsConfig(),
) -> np.ndarray:
    """
    Re-split the reference between the two tasks for fixed hyperparameters.

    The log terms of the evidence are concave in g_F, so minimizing
    sum_F g_F / g_F(old) over splits with p_hat_R + J p_hat_I fixed never
    decreases L(a). The minimizer is closed form:

        lambda = (g_R M^-1 + g_I J M^-1 J^T)^-1 p_hat
        p_hat_R = g_R M^-1 lambda,  p_hat_I = g_I M^-1 J^T lambda

    with M = C^-1 (standard form) or M = C (printed form).

    Args:
        S_breve: Real dictionary, shape (N, B)
        targets: Current split, shape (N, 2)
        a: Hyperparameters; inf marks a pruned basis
        cfg: Supplies beta_mt2 and the evidence form

    Returns:
        New split, shape (N, 2), representing the same reference
    """
    a = np.asarray(a, dtype=float)
    N = S_breve.shape[0]
    active = np.isfinite(a)
    Phi = S_breve[:, active]
    C = np.eye(N) + (Phi / a[active]) @ Phi.T
    factor = linalg.cho_factor(C, lower=True)

    if cfg.evidence_form == "standard":
        quad = np.sum(targets * linalg.cho_solve(factor, targets), axis=0)
        M_inv = C
    else:
        quad = np.sum(targets * (C @ targets), axis=0)
        M_inv = linalg.cho_solve(factor, np.eye(N))
    g_R, g_I = quad + 2 * cfg.beta_mt2

    P = g_R * M_inv + g_I * _rotate_congruence(M_inv)
    lam = linalg.solve(P, combine_targets(targets), assume_a="pos")
    return np.column_stack([g_R * (M_inv @ lam), g_I * (M_inv @ unrotate(lam))])


def st_index_map(n_locations: int) -> np.ndarray:
    """
    Column of S_tilde for each (group, part).

    Blocks of ``n_locations`` columns are ordered (x,R), (x,I), (y,R),
    (y,I), (z,R), (z,I); entry ``[3m + f, part]`` is the column of
    location ``m``, axis ``f``.
    """
    groups = np.arange(3 * n_locations)
    loc, axis = groups // 3, groups % 3
    return np.column_stack([(2 * axis) * n_locations + loc, (2 * axis + 1) * n_locations + loc])


def tilde_matrix(S: np.ndarray) -> np.ndarray:
    """
    S_tilde in the block layout of :func:`st_index_map`.

    Acting on ``[R(w); -I(w)]`` it yields ``[R(S w*); I(S w*)]``.
    """
    L, n_groups = S.shape
    index = st_index_map(n_groups // 3)
    S_tilde = np.empty((2 * L, 2 * n_groups))
    S_tilde[:, index[:, 0]] = np.vstack([S.real, S.imag])
    S_tilde[:, index[:, 1]] = np.vstack([-S.imag, S.real])
    return S_tilde


def st_reassemble(w_tilde: np.ndarray, n_groups: int) -> np.ndarray:
    """Stored complex weights from an S_tilde coefficient vector."""
    index = st_index_map(n_groups // 3)
    return w_tilde[index[:, 0]] - 1j * w_tilde[index[:, 1]]


# =============================================================================
# POSTERIORS AND EVIDENCE
# =============================================================================

def _posterior_active(
    G_aa: np.ndarray,
    alpha_a: np.ndarray,
    rhs: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Sigma = (G_aa + diag(alpha_a))^-1, mean = Sigma @ rhs and log|Sigma^-1|."""
    H = G_aa + np.diag(alpha_a)
    if H.shape[0] == 0:
        return np.zeros((0, 0)), np.zeros((0,) + np.shape(rhs)[1:]), 0.0
    try:
        factor = linalg.cho_factor(H, lower=True)
    except linalg.LinAlgError as e:
        raise BayesianEngineError(
            f"posterior system is singular: {e}", condition=float(np.linalg.cond(H))
        ) from e
    Sigma = linalg.cho_solve(factor, np.eye(H.shape[0]))
    Sigma = 0.5 * (Sigma + Sigma.T)
    mean = Sigma @ rhs
    logdet_H = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return Sigma, mean, logdet_H


def _embed(active: np.ndarray, n: int, mean_a: np.ndarray, Sigma_a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = np.zeros((n,) + mean_a.shape[1:])
    cov = np.zeros((n, n))
    if active.size:
        mean[active] = mean_a
        cov[np.ix_(active, active)] = Sigma_a
    return mean, cov


def mt_posterior(
    S_breve: np.ndarray,
    p_hat_F: np.ndarray,
    a: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Shared-hyperparameter posterior.

    Args:
        S_breve: Real dictionary, shape (N, B)
        p_hat_F: Task target(s), shape (N,) or (N, T)
        a: Hyperparameters, >= 0; inf marks a pruned basis

    Returns:
        Posterior mean (zeros on pruned bases) and covariance (B x B, zero
        outside the active block)

    Raises:
        BayesianEngineError: Singular posterior system
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("hyperparameters must be non-negative")
    active = np.flatnonzero(np.isfinite(a))
    Phi = S_breve[:, active]
    Sigma_a, mean_a, _ = _posterior_active(Phi.T @ Phi, a[active], Phi.T @ p_hat_F)
    return _embed(active, S_breve.shape[1], mean_a, Sigma_a)


def st_posterior(
    S_tilde: np.ndarray,
    p_hat: np.ndarray,
    a_tilde: np.ndarray,
    sigma2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Single-task posterior: Sigma = (S^T S / sigma2 + A)^-1, mean = Sigma S^T p / sigma2.

    Raises:
        BayesianEngineError: Singular posterior system
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    a_tilde = np.asarray(a_tilde, dtype=float)
    active = np.flatnonzero(np.isfinite(a_tilde))
    Phi = S_tilde[:, active]
    # (G/s2 + A)^-1 = s2 (G + s2 A)^-1
    Sigma_scaled, mean_a, _ = _posterior_active(Phi.T @ Phi, sigma2 * a_tilde[active], Phi.T @ p_hat)
    return _embed(active, S_tilde.shape[1], mean_a, sigma2 * Sigma_scaled)


def _evidence_terms(
    a: np.ndarray,
    S_breve: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    active = np.isfinite(a)
    Phi = S_breve[:, active]
    C = np.eye(S_breve.shape[0]) + (Phi / a[active]) @ Phi.T
    _, logdet = np.linalg.slogdet(C)
    return C, Phi, float(logdet)


def mt_evidence(
    a: np.ndarray,
    S_breve: np.ndarray,
    p_hat_R: np.ndarray,
    p_hat_I: np.ndarray,
    cfg: MtBcsConfig = MtBcsConfig(),
) -> float:
    """
    MT-BCS log evidence.

    Args:
        a: Hyperparameters, > 0; inf excludes a basis
        S_breve: Real dictionary, shape (N, B)
        p_hat_R: Real-part task target
        p_hat_I: Imaginary-part task target
        cfg: Supplies beta_mt1, beta_mt2 and the evidence form

    Returns:
        L(a); -inf when any hyperparameter is <= 0
    """
    a = np.asarray(a, dtype=float)
    if np.any(~(a > 0)):
        return float("-inf")
    C, _, logdet = _evidence_terms(a, S_breve)
    K = S_breve.shape[1] + 2 * cfg.beta_mt1
    total = 0.0
    for p in (p_hat_R, p_hat_I):
        if cfg.evidence_form == "standard":
            quad = p @ np.linalg.solve(C, p)
        else:
            quad = p @ C @ p
        total += logdet + K * np.log(quad + 2 * cfg.beta_mt2)
    return -0.5 * total


def mt_evidence_gradient(
    a: np.ndarray,
    S_breve: np.ndarray,
    p_hat_R: np.ndarray,
    p_hat_I: np.ndarray,
    cfg: MtBcsConfig = MtBcsConfig(),
) -> np.ndarray:
    """Analytic dL/da; zero on pruned (inf) entries."""
    a = np.asarray(a, dtype=float)
    C, Phi, _ = _evidence_terms(a, S_breve)
    active = np.isfinite(a)
    a_act = a[active]
    K = S_breve.shape[1] + 2 * cfg.beta_mt1

    s = np.sum(Phi * np.linalg.solve(C, Phi), axis=0)
    grad_act = np.zeros(a_act.size)
    for p in (p_hat_R, p_hat_I):
        if cfg.evidence_form == "standard":
            Cinv_p = np.linalg.solve(C, p)
            q = Phi.T @ Cinv_p
            g = p @ Cinv_p + 2 * cfg.beta_mt2
            grad_act += (s - K * q**2 / g) / (2 * a_act**2)
        else:
            r = Phi.T @ p
            g = p @ C @ p + 2 * cfg.beta_mt2
            grad_act += (s + K * r**2 / g) / (2 * a_act**2)

    grad = np.zeros(a.size)
    grad[active] = grad_act
    return grad


# =============================================================================
# SEQUENTIAL MAXIMIZATION HELPERS
# =============================================================================

def _mt_contribution(alpha: np.ndarray, s: np.ndarray, e: np.ndarray, c: np.ndarray, K: float) -> np.ndarray:
    """Evidence contribution of one basis at hyperparameter ``alpha`` (0 at inf)."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = alpha + s
        ratio = np.minimum(e / (c * u[:, None]), 1.0 - 1e-15)
        value = 0.5 * np.sum(
            np.log(alpha)[:, None] - np.log(u)[:, None] - K * np.log1p(-ratio), axis=1
        )
    return np.where(np.isfinite(alpha), value, 0.0)


def _mt_optimum(s: np.ndarray, e: np.ndarray, c: np.ndarray, K: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Best shared hyperparameter per basis for two tasks.

    Stationarity of the contribution reduces to a quadratic in alpha;
    its positive roots are compared against alpha = inf.
    """
    c1, c2 = c[:, 0], c[:, 1]
    e1, e2 = e[:, 0], e[:, 1]
    h1, h2 = c1 * s - e1, c2 * s - e2
    qa = 2 * s * c1 * c2 - K * (e1 * c2 + e2 * c1)
    qb = 2 * s * (c1 * h2 + c2 * h1) - K * (e1 * h2 + e2 * h1)
    qc = 2 * s * h1 * h2

    with np.errstate(divide="ignore", invalid="ignore"):
        disc = qb**2 - 4 * qa * qc
        root = np.sqrt(np.maximum(disc, 0.0))
        linear = np.abs(qa) <= 1e-14 * (np.abs(qb) + np.abs(qc) + _TINY)
        r1 = np.where(linear, -qc / qb, (-qb + root) / (2 * qa))
        r2 = np.where(linear, np.nan, (-qb - root) / (2 * qa))
        r1 = np.where(disc < 0, np.nan, r1)
        r2 = np.where(disc < 0, np.nan, r2)

    best_alpha = np.full(s.size, np.inf)
    best_value = np.zeros(s.size)
    for candidate in (r1, r2):
        valid = np.isfinite(candidate) & (candidate > 0) & (s > 0)
        trial = np.where(valid, candidate, np.inf)
        value = _mt_contribution(trial, s, e, c, K)
        better = valid & (value > best_value)
        best_alpha = np.where(better, trial, best_alpha)
        best_value = np.where(better, value, best_value)
    return best_alpha, best_value


def _st_contribution(alpha: np.ndarray, s: np.ndarray, q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = alpha + s
        value = 0.5 * (np.log(alpha) - np.log(u) + q**2 / u)
    return np.where(np.isfinite(alpha), value, 0.0)


def _leave_one_out(alpha_act: np.ndarray, S_act: np.ndarray) -> np.ndarray:
    """alpha - S for active bases, floored relative to alpha."""
    return np.maximum(alpha_act - S_act, _LOO_FLOOR * alpha_act)


def _finite_gains(delta: np.ndarray) -> np.ndarray:
    """Evidence gains with NaN and +inf replaced by -inf so argmax never picks them."""
    return np.where(np.isfinite(delta), delta, -np.inf)


def _is_converged(
    alpha: np.ndarray,
    alpha_new: np.ndarray,
    delta: np.ndarray,
    hyper_tol: float,
) -> bool:
    inactive = ~np.isfinite(alpha)
    adding = inactive & np.isfinite(alpha_new) & (delta > 0)
    deleting = ~inactive & ~np.isfinite(alpha_new) & (delta > 0)
    if adding.any() or deleting.any():
        return False
    both = ~inactive & np.isfinite(alpha_new)
    if not both.any():
        return True
    change = np.abs(np.log(alpha_new[both] / alpha[both]))
    return bool(change.max() < hyper_tol)


# =============================================================================
# MULTI-TASK ENGINE
# =============================================================================

@log_timed("bcs.mt_maximize")
def mt_maximize(
    problem: SampledProblem,
    cfg: MtBcsConfig = MtBcsConfig(),
) -> tuple[np.ndarray, EvidenceState]:
    """
    Maximize the MT-BCS evidence and return the posterior-mean weights.

    Each sweep re-splits the reference between the tasks (see
    :func:`refine_split`), then updates the single hyperparameter with the
    largest evidence gain. Both steps ascend L(a), so the recorded
    evidence is non-decreasing.

    Args:
        problem: Sampled problem (its reference is the fitting target)
        cfg: Hyperpriors and loop controls

    Returns:
        Stored complex weights (one per group) and the evidence state
    """
    Phi = breve_matrix(problem.steering)
    targets = mt_targets(problem.reference)
    N, B = Phi.shape
    sigma2 = cfg.resolve_noise_variance(problem.scenario.alpha, problem.n_sources)
    reference_norm = max(float(np.linalg.norm(targets)), _TINY)

    G = Phi.T @ Phi
    diag_G = np.diag(G).copy()
    usable = diag_G > 1e-12 * max(float(diag_G.max(initial=0.0)), _TINY)
    K = B + 2 * cfg.beta_mt1
    two_b2 = 2 * cfg.beta_mt2
    floor = N * sigma2 if cfg.noise_floor_stop else -np.inf

    alpha = np.full(B, np.inf)
    state = EvidenceState(
        a=alpha,
        mean_R=np.zeros(B),
        mean_I=np.zeros(B),
        covariance=np.zeros((B, B)),
        active_set=[],
        noise_variance=sigma2,
    )

    for iteration in range(1, cfg.max_em_iterations + 1):
        refined = refine_split(Phi, targets, alpha, cfg)
        split_settled = np.linalg.norm(refined - targets) <= cfg.hyper_tol * reference_norm
        targets = refined
        b = Phi.T @ targets
        tt = np.sum(targets**2, axis=0)

        act = np.flatnonzero(np.isfinite(alpha))
        if act.size:
            G_aa = G[np.ix_(act, act)]
            Sigma, mu, logdet_H = _posterior_active(G_aa, alpha[act], b[act])
            G_a = G[:, act]
            S_all = diag_G - np.sum((G_a @ Sigma) * G_a, axis=1)
            Q = b - G_a @ mu
            fit = np.sum(b[act] * mu, axis=0)
            g = tt - fit + two_b2
            logdet_C = logdet_H - float(np.sum(np.log(alpha[act])))
            residual = float(np.sum(tt - 2 * fit + np.sum(mu * (G_aa @ mu), axis=0)))
        else:
            S_all, Q = diag_G.copy(), b.copy()
            g = tt + two_b2
            logdet_C = 0.0
            residual = float(np.sum(tt))

        evidence = -0.5 * float(np.sum(logdet_C + K * np.log(g)))
        if state.evidence_history:
            previous = state.evidence_history[-1]
            if evidence < previous - _MONOTONE_TOL * max(1.0, abs(previous)):
                state.monotonicity_violations += 1
                logger.warning("bcs.evidence_decreased", previous=previous, current=evidence)
        state.evidence_history.append(evidence)

        s = S_all.copy()
        e = Q**2
        c = np.tile(g, (B, 1))
        if act.size:
            denom = _leave_one_out(alpha[act], S_all[act])
            s[act] = alpha[act] * S_all[act] / denom
            e[act] = (alpha[act][:, None] * Q[act] / denom[:, None]) ** 2
            c[act] = g[None, :] + Q[act] ** 2 / denom[:, None]

        alpha_new, value_new = _mt_optimum(s, e, c, K)
        alpha_new[~usable] = np.inf
        value_new[~usable] = 0.0
        value_cur = np.zeros(B)
        if act.size:
            value_cur[act] = _mt_contribution(alpha[act], s[act], e[act], c[act], K)
        delta = _finite_gains(value_new - value_cur)
        if residual <= floor:
            delta[~np.isfinite(alpha)] = -np.inf

        state.iterations = iteration
        if split_settled and _is_converged(alpha, alpha_new, delta, cfg.hyper_tol):
            state.converged = True
            break
        best = int(np.argmax(delta))
        if not delta[best] > 0:
            if split_settled:
                state.converged = True
                break
            continue
        alpha[best] = alpha_new[best]

    if not state.converged:
        logger.warning("bcs.not_converged", iterations=state.iterations)

    alpha[alpha > cfg.prune_threshold] = np.inf
    active = np.flatnonzero(np.isfinite(alpha))
    mean, covariance = mt_posterior(Phi, targets, alpha)
    state.a = alpha
    state.mean_R, state.mean_I = mean[:, 0], mean[:, 1]
    state.covariance = covariance
    state.active_set = active.tolist()
    state.targets = targets
    if cfg.evidence_form == "printed" and active.size:
        state.printed_evidence = mt_evidence(alpha, Phi, targets[:, 0], targets[:, 1], cfg)

    logger.info(
        "bcs.converged" if state.converged else "bcs.stopped",
        engine="multi-task",
        iterations=state.iterations,
        active=len(state.active_set),
        evidence=state.evidence_history[-1] if state.evidence_history else None,
    )
    # Effective coefficient is mean_R + j mean_I; stored weights are its conjugate
    return state.mean_R - 1j * state.mean_I, state


# =============================================================================
# SINGLE-TASK ENGINE
# =============================================================================

def _st_likelihood(
    N: int,
    sigma2: float,
    logdet_H: float,
    alpha_act: np.ndarray,
    tt: float,
    fit: float,
    cfg: StBcsConfig,
) -> float:
    # |C| = sigma2^(N-k) |G + sigma2 A| / |A| over the k active bases
    log_det_C = logdet_H - float(np.sum(np.log(alpha_act))) - (alpha_act.size - N) * np.log(sigma2)
    quad = (tt - fit) / sigma2
    value = -0.5 * (N * np.log(2 * np.pi) + log_det_C + quad)
    beta = 1.0 / sigma2
    value += float(np.sum(cfg.beta_st3 * np.log(alpha_act) - cfg.beta_st4 * alpha_act))
    value += cfg.beta_st5 * np.log(beta) - cfg.beta_st6 * beta
    return value


@log_timed("bcs.st_maximize")
def st_maximize(
    problem: SampledProblem,
    cfg: StBcsConfig = StBcsConfig(),
) -> tuple[np.ndarray, StBcsState]:
    """
    Maximize the single-task marginal likelihood over the 6M hyperparameters.

    Args:
        problem: Sampled problem (its reference is the fitting target)
        cfg: Loop controls, hyperpriors and noise policy

    Returns:
        Stored complex weights (one per group) and the ST state
    """
    S_tilde = tilde_matrix(problem.steering)
    t = np.concatenate([problem.reference.real, problem.reference.imag])
    N, B = S_tilde.shape
    n_groups = problem.steering.shape[1]
    sigma2 = cfg.resolve_noise_variance(problem.scenario.alpha, problem.n_sources)

    G = S_tilde.T @ S_tilde
    b = S_tilde.T @ t
    tt = float(t @ t)
    diag_G = np.diag(G).copy()
    usable = diag_G > 1e-12 * max(float(diag_G.max(initial=0.0)), _TINY)
    sigma2_floor = max(1e-10 * tt / N, _TINY)

    alpha = np.full(B, np.inf)
    state = StBcsState(
        a_tilde=alpha,
        sigma2=sigma2,
        mean=np.zeros(B),
        covariance=np.zeros((B, B)),
        active_set=[],
        beta_st=(cfg.beta_st3, cfg.beta_st4, cfg.beta_st5, cfg.beta_st6),
    )
    if tt == 0.0:
        state.converged = True
        return np.zeros(n_groups, dtype=complex), state

    for iteration in range(1, cfg.max_em_iterations + 1):
        beta = 1.0 / sigma2
        act = np.flatnonzero(np.isfinite(alpha))
        if act.size:
            G_aa = G[np.ix_(act, act)]
            Sigma_s, mu, logdet_H = _posterior_active(G_aa, sigma2 * alpha[act], b[act])
            G_a = G[:, act]
            S_all = beta * diag_G - beta * np.sum((G_a @ Sigma_s) * G_a, axis=1)
            Q = beta * (b - G_a @ mu)
            fit = float(b[act] @ mu)
            gamma = 1.0 - sigma2 * alpha[act] * np.diag(Sigma_s)
            state.likelihood_history.append(
                _st_likelihood(N, sigma2, logdet_H, alpha[act], tt, fit, cfg)
            )
        else:
            S_all, Q = beta * diag_G, beta * b
            mu, gamma, fit = np.zeros(0), np.zeros(0), 0.0
            state.likelihood_history.append(-0.5 * (N * np.log(2 * np.pi * sigma2) + beta * tt))

        s, q = S_all.copy(), Q.copy()
        if act.size:
            denom = _leave_one_out(alpha[act], S_all[act])
            s[act] = alpha[act] * S_all[act] / denom
            q[act] = alpha[act] * Q[act] / denom

        with np.errstate(over="ignore", invalid="ignore"):
            theta = q**2 - s
            alpha_new = np.full(B, np.inf)
            grow = usable & np.isfinite(theta) & (theta > 0)
            alpha_new[grow] = s[grow] ** 2 / theta[grow]
            alpha_new[~(alpha_new > 0)] = np.inf
        value_cur = np.zeros(B)
        if act.size:
            value_cur[act] = _st_contribution(alpha[act], s[act], q[act])
        delta = _finite_gains(_st_contribution(alpha_new, s, q) - value_cur)

        sigma2_new = sigma2
        if cfg.learn_noise and act.size:
            G_aa = G[np.ix_(act, act)]
            rss = tt - 2 * fit + float(mu @ (G_aa @ mu))
            dof = N - float(np.sum(gamma)) + 2 * cfg.beta_st5
            if dof > 0:
                sigma2_new = max((rss + 2 * cfg.beta_st6) / dof, sigma2_floor)

        state.iterations = iteration
        noise_settled = abs(np.log(sigma2_new / sigma2)) < cfg.hyper_tol
        if noise_settled and _is_converged(alpha, alpha_new, delta, cfg.hyper_tol):
            state.converged = True
            break
        best = int(np.argmax(delta))
        if delta[best] > 0:
            alpha[best] = alpha_new[best]
        elif noise_settled:
            state.converged = True
            break
        sigma2 = sigma2_new

    if not state.converged:
        logger.warning("bcs.not_converged", engine="single-task", iterations=state.iterations)

    alpha[alpha > cfg.prune_threshold] = np.inf
    mean, covariance = st_posterior(S_tilde, t, alpha, sigma2)
    state.a_tilde = alpha
    state.sigma2 = sigma2
    state.mean = mean
    state.covariance = covariance
    state.active_set = np.flatnonzero(np.isfinite(alpha)).tolist()

    logger.info(
        "bcs.converged" if state.converged else "bcs.stopped",
        engine="single-task",
        iterations=state.iterations,
        active=len(state.active_set),
        sigma2=sigma2,
    )
    return st_reassemble(mean, n_groups), state
