"""Informed weights: empirical likelihood, exponential tilting, closed form.

All three take a *centered* constraint set (target 0) and return weights
``w`` with ``sum(w) = 1`` and ``G^T w = 0``.

Empirical likelihood
    ``w_i = 1 / (n (1 + lam . G_i))`` where ``lam`` minimises the convex dual
    ``M(lam) = -mean(log(1 + G lam))`` over the region
    ``min_i (1 + lam . G_i) >= 1/n``.
Exponential tilting
    ``w_i = exp(lam . G_i) / sum_j exp(lam . G_j)`` where ``lam`` minimises the
    log-partition function ``log sum_j exp(lam . G_j)``.
Closed form
    ``w_i = (1 - G_i . S^{-1} gbar + gbar . S^{-1} gbar) / n`` with ``gbar`` the
    sample mean of the rows and ``S`` their empirical variance.  These agree
    with both projections up to o(1/n) and may be negative for small n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RESIDUAL_TOL, WEIGHT_SUM_TOL, ConstraintSet, Method, SolveReport, WeightVector
from .errors import (
    DomainError,
    InfeasibleConstraints,
    NoConvergence,
    NotCentered,
    NotPositiveDefinite,
    NumericalError,
    RankDeficient,
    SingularVariance,
)
from .feasibility import check_hull_membership, check_rank_condition
from .linalg import spd_solve

_ARMIJO = 1e-4
# Below this Newton decrement the objective change is lost in rounding, so the
# line search is skipped and the full (region-safe) step is taken.
_FULL_STEP_DECREMENT = 1e-12
_FRACTION_TO_BOUNDARY = 0.99
# Relative slack under which an EL solution is reported as touching the region
# boundary 1 + lam . G_i = 1/n, i.e. a weight of 1.
_BOUNDARY_RTOL = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    grad_tol: float = 1e-10
    max_iter: int = 100
    backtrack_factor: float = 0.5
    min_step: float = 1e-14
    rank_rel_tol: float = 1e-10
    residual_tol: float = RESIDUAL_TOL
    sum_tol: float = WEIGHT_SUM_TOL
    check_preconditions: bool = True

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise DomainError("grad_tol must be positive")
        if not 0 < self.backtrack_factor < 1:
            raise DomainError("backtrack_factor must lie in (0, 1)")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if not self.min_step > 0:
            raise DomainError("min_step must be positive")


DEFAULT_CONFIG = SolverConfig()


def _check_preconditions(cs: ConstraintSet, config: SolverConfig):
    if not cs.centered:
        raise NotCentered("solvers require a centered constraint set (call center() first)")
    if not config.check_preconditions:
        return
    if not check_hull_membership(cs):
        raise InfeasibleConstraints("target is not in the convex hull of the constraint values")
    if not check_rank_condition(cs, config.rank_rel_tol):
        raise RankDeficient("rank([1 | G]) < m + 1; deduplicate the constraints first")


def _newton_direction(H, grad):
    try:
        return spd_solve(H, -grad)
    except NotPositiveDefinite:
        raise RankDeficient("dual Hessian is singular; constraints are linearly dependent") from None


def _backtrack(objective, lam, direction, t, f0, slope, config):
    """Armijo backtracking; returns the accepted step or ``None`` on stall."""
    if -slope <= _FULL_STEP_DECREMENT:
        return t
    while t >= config.min_step:
        f1 = objective(lam + t * direction)
        if f1 <= f0 + _ARMIJO * t * slope:
            return t
        t *= config.backtrack_factor
    return None


def _finish(method, w, lam, it, gnorm, residual, converged, boundary, history, config):
    report = SolveReport(
        lambda_=lam,
        iterations=it,
        grad_norm=gnorm,
        residual=residual,
        converged=converged,
        boundary=boundary,
        history=tuple(history),
    )
    try:
        weights = WeightVector(w, method, sum_tol=config.sum_tol)
    except DomainError as exc:
        if converged:
            raise NumericalError(f"{method.value} weights are invalid: {exc}") from None
        weights = None
    if not converged:
        raise NoConvergence(
            f"{method.value} solver stopped after {it} iterations "
            f"(grad_norm={gnorm:.3e}, residual={residual:.3e})",
            weights=weights,
            report=report,
        )
    return weights, report


def solve_empirical_likelihood(cs: ConstraintSet, config: SolverConfig = DEFAULT_CONFIG):
    """Empirical-likelihood weights by damped Newton on the dual.

    Returns ``(WeightVector, SolveReport)``.  Raises
    :class:`InfeasibleConstraints` / :class:`RankDeficient` when the
    preconditions fail and :class:`NoConvergence` when the iteration cap is hit.
    """
    _check_preconditions(cs, config)
    G = cs.eval_matrix
    n, m = G.shape
    floor = 1.0 / n

    def objective(lam):
        return -np.mean(np.log(1.0 + G @ lam))

    lam = np.zeros(m)
    history = [lam]
    converged = False
    it = 0
    while True:
        u = 1.0 + G @ lam
        raw = 1.0 / (n * u)
        grad = -(G.T @ raw)
        w = raw / raw.sum()
        residual = float(np.max(np.abs(G.T @ w)))
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= config.grad_tol and residual <= config.residual_tol:
            converged = True
            break
        if it >= config.max_iter:
            break
        H = (G * (n * raw**2)[:, None]).T @ G
        d = _newton_direction(H, grad)
        Gd = G @ d
        shrinking = Gd < 0
        t = 1.0
        if np.any(shrinking):
            t_max = float(np.min((u[shrinking] - floor) / -Gd[shrinking]))
            if t_max <= 1.0:
                t = _FRACTION_TO_BOUNDARY * t_max
        t = _backtrack(objective, lam, d, t, objective(lam), float(grad @ d), config)
        if t is None:
            break
        lam = lam + t * d
        history.append(lam)
        it += 1

    # Read off the weights rather than u: lam itself is poorly determined when
    # one point carries nearly all the mass.
    boundary = bool(np.max(w) >= 1.0 / (1.0 + _BOUNDARY_RTOL))
    return _finish(Method.EMPIRICAL_LIKELIHOOD, w, lam, it, gnorm, residual, converged, boundary, history, config)


def tilt_probabilities(G, lam):
    """Softmax of ``G @ lam`` with max-subtraction; also returns the log-partition."""
    s = G @ lam
    smax = s.max()
    e = np.exp(s - smax)
    total = e.sum()
    return e / total, smax + np.log(total)


def solve_exponential_tilt(cs: ConstraintSet, config: SolverConfig = DEFAULT_CONFIG):
    """Exponential-tilting weights by Newton on the log-partition dual.

    The Hessian is ``Var_q(G)``, positive definite under the rank condition.
    Returns ``(WeightVector, SolveReport)``.
    """
    _check_preconditions(cs, config)
    G = cs.eval_matrix
    m = G.shape[1]

    def objective(lam):
        return tilt_probabilities(G, lam)[1]

    lam = np.zeros(m)
    history = [lam]
    converged = False
    it = 0
    while True:
        q, log_partition = tilt_probabilities(G, lam)
        grad = G.T @ q
        gnorm = residual = float(np.max(np.abs(grad)))
        if gnorm <= config.grad_tol and residual <= config.residual_tol:
            converged = True
            break
        if it >= config.max_iter:
            break
        Gc = G - grad
        H = (Gc * q[:, None]).T @ Gc
        d = _newton_direction(H, grad)
        t = _backtrack(objective, lam, d, 1.0, log_partition, float(grad @ d), config)
        if t is None:
            break
        lam = lam + t * d
        history.append(lam)
        it += 1

    return _finish(Method.EXPONENTIAL_TILT, q, lam, it, gnorm, residual, converged, False, history, config)


def empirical_variance(G) -> np.ndarray:
    """``(1/n) sum_i (G_i - gbar)(G_i - gbar)^T``."""
    Gc = G - G.mean(axis=0)
    return Gc.T @ Gc / G.shape[0]


def informed_weights(cs: ConstraintSet, rank_rel_tol: float = 1e-10) -> WeightVector:
    """Closed-form informed weights.

    ``sum(w) = 1`` and ``G^T w = 0`` hold exactly in exact arithmetic.
    Raises :class:`SingularVariance` if the empirical variance of the
    constraints is numerically singular.
    """
    if not cs.centered:
        raise NotCentered("informed_weights requires a centered constraint set")
    G = cs.eval_matrix
    n = G.shape[0]
    gbar = G.mean(axis=0)
    S = empirical_variance(G)
    eig = np.linalg.eigvalsh(S)
    if eig[-1] <= 0 or eig[0] < rank_rel_tol * eig[-1]:
        raise SingularVariance(f"empirical variance of g is singular (eigenvalues {eig[0]:.3e}..{eig[-1]:.3e})")
    v = spd_solve(S, gbar)
    p = (1.0 - G @ v + gbar @ v) / n
    return WeightVector(p, Method.CLOSED_FORM)


METHODS = {
    "el": Method.EMPIRICAL_LIKELIHOOD,
    "tilt": Method.EXPONENTIAL_TILT,
    "closed": Method.CLOSED_FORM,
}


def compute_weights(cs: ConstraintSet, method, config: SolverConfig = DEFAULT_CONFIG) -> WeightVector:
    """Dispatch on a method tag; the solve report is dropped."""
    method = METHODS.get(method, method)
    method = Method(method)
    if method is Method.EMPIRICAL_LIKELIHOOD:
        return solve_empirical_likelihood(cs, config)[0]
    if method is Method.EXPONENTIAL_TILT:
        return solve_exponential_tilt(cs, config)[0]
    if method is Method.CLOSED_FORM:
        return informed_weights(cs, config.rank_rel_tol)
    return WeightVector.uniform(cs.n)
