"""Seeded simulation experiments for the large-sample behaviour of the
informed weights.

Each ``run_*`` function draws ``replicates`` independent samples for every
``n`` in the grid, computes a per-replicate statistic, and summarises it per
``n``.  Replicate ``k`` at size ``n`` reads the random stream
``(seed, k, stream=n)`` so results do not depend on execution order; with
``workers > 1`` replicates are farmed out to processes and reassembled in
index order.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..core import ConstraintSet, FunctionSpec, Indicator, Monomial, Sample, center, evaluate_constraints
from ..errors import DomainError, InformedMeasureError
from ..linalg import spd_solve
from ..measure import (
    InformedMeasure,
    informed_quantile,
    limit_variance,
    normal_two_sided_tail,
    quantile_information,
    quantile_limit_variance,
)
from ..solvers import DEFAULT_CONFIG, SolverConfig, informed_weights, solve_empirical_likelihood, solve_exponential_tilt
from .distributions import get_distribution, population_covariance, population_mean, population_variance
from .rng import uniforms

SUMMARY_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


@dataclass(frozen=True)
class ExperimentSpec:
    distribution: str = "std_normal"
    g_spec: tuple = (Monomial(1), Monomial(2))
    n_grid: tuple = (100, 1000)
    replicates: int = 1000
    seed: int = 0
    test_function: FunctionSpec = Indicator(0.0)
    # Pair each draw with its law-preserving reflection (needs even n).
    antithetic: bool = False
    solver: SolverConfig = DEFAULT_CONFIG
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "g_spec", tuple(self.g_spec))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        dist = get_distribution(self.distribution)
        if not self.g_spec:
            raise DomainError("g_spec must name at least one function")
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")
        if not self.n_grid:
            raise DomainError("n_grid must not be empty")
        m = len(self.g_spec)
        for n in self.n_grid:
            if n < m + 2:
                raise DomainError(f"every n must be at least m + 2 = {m + 2}, got {n}")
            if self.antithetic and n % 2:
                raise DomainError(f"antithetic sampling needs even n, got {n}")
        if self.antithetic and dist.reflect is None:
            raise DomainError(f"{dist.name} has no law-preserving reflection")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise DomainError("workers must be at least 1")

    @property
    def dist(self):
        return get_distribution(self.distribution)

    @property
    def targets(self) -> np.ndarray:
        return population_mean(self.dist, self.g_spec)

    @property
    def sigma(self) -> np.ndarray:
        return population_variance(self.dist, self.g_spec)

    def echo(self) -> dict:
        return {
            "distribution": self.distribution,
            "g_spec": [g.label for g in self.g_spec],
            "targets": self.targets.tolist(),
            "n_grid": list(self.n_grid),
            "replicates": self.replicates,
            "seed": self.seed,
            "test_function": self.test_function.label,
            "antithetic": self.antithetic,
        }


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    variance: float
    quantiles: dict

    @property
    def median(self) -> float:
        return self.quantiles[0.5]

    @classmethod
    def of(cls, values) -> Summary:
        v = np.asarray(values, dtype=float)
        v = v[np.isfinite(v)]
        if v.size == 0:
            return cls(0, math.nan, math.nan, {q: math.nan for q in SUMMARY_QUANTILES})
        variance = float(np.var(v, ddof=1)) if v.size > 1 else math.nan
        qs = np.quantile(v, SUMMARY_QUANTILES)
        return cls(int(v.size), float(v.mean()), variance, dict(zip(SUMMARY_QUANTILES, map(float, qs))))

    def to_dict(self):
        return {
            "count": self.count,
            "mean": self.mean,
            "variance": self.variance,
            "quantiles": {str(q): v for q, v in self.quantiles.items()},
        }


@dataclass
class NResult:
    n: int
    replicates: int
    failures: int
    stats: dict
    extra: dict = field(default_factory=dict)

    @property
    def failure_rate(self) -> float:
        return self.failures / self.replicates


@dataclass
class ExperimentResult:
    name: str
    columns: tuple
    per_n: dict
    records: list
    metadata: dict

    def statistic(self, column, attribute="median"):
        """Per-n sequence of one summary attribute, in grid order."""
        return [getattr(self.per_n[n].stats[column], attribute) for n in self.per_n]

    def to_dict(self):
        return {
            "experiment": self.name,
            "metadata": self.metadata,
            "per_n": {
                str(n): {
                    "replicates": r.replicates,
                    "failures": r.failures,
                    "failure_rate": r.failure_rate,
                    "stats": {c: s.to_dict() for c, s in r.stats.items()},
                    "extra": r.extra,
                }
                for n, r in self.per_n.items()
            },
        }


def is_strictly_decreasing(values) -> bool:
    values = list(values)
    return all(b < a for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# Sampling helpers
# ---------------------------------------------------------------------------


def draw_sample(spec: ExperimentSpec, n: int, replicate: int) -> Sample:
    dist = spec.dist
    if spec.antithetic:
        half = dist.sample(uniforms(spec.seed, replicate, n // 2, stream=n))
        x = np.empty(n)
        x[0::2] = half
        x[1::2] = dist.reflect(half)
    else:
        x = dist.sample(uniforms(spec.seed, replicate, n, stream=n))
    return Sample(x)


def centered_constraints(spec: ExperimentSpec, sample: Sample) -> ConstraintSet:
    return center(evaluate_constraints(sample, spec.g_spec, spec.targets))


# ---------------------------------------------------------------------------
# Per-replicate statistics
# ---------------------------------------------------------------------------


def _lambda_replicate(spec, n, k, params):
    cs = centered_constraints(spec, draw_sample(spec, n, k))
    G = cs.eval_matrix
    lam_el = solve_empirical_likelihood(cs, spec.solver)[1].lambda_
    lam_tilt = solve_exponential_tilt(cs, spec.solver)[1].lambda_
    # Second-moment matrix P_n g g^T, as in the multiplier expansion.
    linear = spd_solve(G.T @ G / n, G.mean(axis=0))
    rn = math.sqrt(n)
    return (
        rn * float(np.linalg.norm(lam_el - linear)),
        rn * float(np.linalg.norm(lam_tilt + linear)),
        rn * float(np.linalg.norm(lam_el + lam_tilt)),
        *(rn * lam_el),
        *(rn * lam_tilt),
    )


def _closeness_replicate(spec, n, k, params):
    cs = centered_constraints(spec, draw_sample(spec, n, k))
    p = informed_weights(cs, spec.solver.rank_rel_tol).weights
    q_el = solve_empirical_likelihood(cs, spec.solver)[0].weights
    q_tilt = solve_exponential_tilt(cs, spec.solver)[0].weights
    return n * float(np.max(np.abs(q_el - p))), n * float(np.max(np.abs(q_tilt - p)))


def _process_replicate(spec, n, k, params):
    sample = draw_sample(spec, n, k)
    cs = centered_constraints(spec, sample)
    p = informed_weights(cs, spec.solver.rank_rel_tol).weights
    f = spec.test_function(sample.values)
    pf = params["pf"]
    rn = math.sqrt(n)
    return rn * (float(p @ f) - pf), rn * (float(f.mean()) - pf)


def _quantile_replicate(spec, n, k, params):
    sample = draw_sample(spec, n, k)
    cs = centered_constraints(spec, sample)
    w = informed_weights(cs, spec.solver.rank_rel_tol)
    alpha, q = params["alpha"], params["q_alpha"]
    informed = informed_quantile(InformedMeasure(sample, w), alpha)
    classical = informed_quantile(InformedMeasure.empirical(sample), alpha)
    rn = math.sqrt(n)
    return rn * (informed.value - q), rn * (classical.value - q), float(informed.monotone_cdf)


def _positivity_replicate(spec, n, k, params):
    cs = centered_constraints(spec, draw_sample(spec, n, k))
    p = informed_weights(cs, spec.solver.rank_rel_tol).weights
    low = float(p.min())
    return low, float(low > 0)


_REPLICATES = {
    "lambda": _lambda_replicate,
    "closeness": _closeness_replicate,
    "variance": _process_replicate,
    "concentration": _process_replicate,
    "quantile": _quantile_replicate,
    "positivity": _positivity_replicate,
}


def _replicate_task(task):
    kind, spec, n, k, params = task
    try:
        return True, _REPLICATES[kind](spec, n, k, params)
    except InformedMeasureError:
        return False, None


def _run(name, kind, spec: ExperimentSpec, columns, params, aggregate) -> ExperimentResult:
    start = time.perf_counter()
    records = []
    per_n = {}
    executor = ProcessPoolExecutor(spec.workers) if spec.workers > 1 else None
    try:
        for n in spec.n_grid:
            tasks = [(kind, spec, n, k, params) for k in range(spec.replicates)]
            if executor is None:
                outcomes = map(_replicate_task, tasks)
            else:
                outcomes = executor.map(_replicate_task, tasks, chunksize=max(1, spec.replicates // (4 * spec.workers)))
            values = np.full((spec.replicates, len(columns)), np.nan)
            ok = np.zeros(spec.replicates, dtype=bool)
            for k, (success, row) in enumerate(outcomes):
                ok[k] = success
                if success:
                    values[k] = row
                records.append((n, k, success, tuple(values[k])))
            stats = {c: Summary.of(values[ok, j]) for j, c in enumerate(columns)}
            extra = aggregate(n, values, ok) if aggregate else {}
            per_n[n] = NResult(n, spec.replicates, int(np.count_nonzero(~ok)), stats, extra)
    finally:
        if executor is not None:
            executor.shutdown()
    metadata = {"spec": spec.echo(), "params": _jsonable(params), "wall_time_s": time.perf_counter() - start}
    return ExperimentResult(name, tuple(columns), per_n, records, metadata)


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def run_lambda_expansion(spec: ExperimentSpec) -> ExperimentResult:
    """Multiplier expansions: ``lam_el ~ +S^{-1} gbar`` and ``lam_tilt ~ -S^{-1} gbar``.

    Per replicate records ``sqrt(n) |lam_el - S^{-1} gbar|``,
    ``sqrt(n) |lam_tilt + S^{-1} gbar|``, ``sqrt(n) |lam_el + lam_tilt|`` and
    both scaled multipliers.  ``extra`` holds the empirical covariance of
    ``sqrt(n) lam`` next to its limit ``Sigma^{-1}``.
    """
    m = len(spec.g_spec)
    el_cols = [f"el_lambda_{j}" for j in range(m)]
    tilt_cols = [f"tilt_lambda_{j}" for j in range(m)]
    columns = ["el_gap", "tilt_gap", "sign_gap", *el_cols, *tilt_cols]
    limit = np.linalg.inv(spec.sigma)

    def aggregate(n, values, ok):
        good = values[ok]
        if good.shape[0] < 2:
            return _jsonable({"limit_covariance": limit})
        return _jsonable({
            "el_covariance": np.cov(good[:, 3:3 + m], rowvar=False).reshape(m, m),
            "tilt_covariance": np.cov(good[:, 3 + m:], rowvar=False).reshape(m, m),
            "limit_covariance": limit,
        })

    return _run("lambda", "lambda", spec, columns, {}, aggregate)


def run_weight_closeness(spec: ExperimentSpec) -> ExperimentResult:
    """``n max_i |q_i - p_i|`` for the EL and tilt weights against the closed form."""
    return _run("closeness", "closeness", spec, ["el_gap", "tilt_gap"], {}, None)


def _process_params(spec):
    f = spec.test_function
    pf = float(population_mean(spec.dist, [f])[0])
    var_f = float(population_variance(spec.dist, [f])[0, 0])
    cov_gf = population_covariance(spec.dist, spec.g_spec, [f])[:, 0]
    return {"pf": pf}, var_f, limit_variance(cov_gf, var_f, spec.sigma)


def run_variance_reduction(spec: ExperimentSpec) -> ExperimentResult:
    """Variance of ``sqrt(n)(P_n^I f - Pf)`` against its analytic limit, alongside
    the classical ``sqrt(n)(P_n f - Pf)``."""
    params, var_f, informed_limit = _process_params(spec)

    def aggregate(n, values, ok):
        return {"limit_variance_informed": informed_limit, "limit_variance_classical": var_f}

    return _run("variance", "variance", spec, ["informed", "classical"], params, aggregate)


def run_concentration(spec: ExperimentSpec, lambda_threshold: float) -> ExperimentResult:
    """Tail frequencies ``P(|alpha_n^I f| > t)`` and ``P(|alpha_n f| > t)``."""
    if not lambda_threshold > 0:
        raise DomainError("lambda_threshold must be positive")
    params, var_f, informed_limit = _process_params(spec)
    params = dict(params, threshold=lambda_threshold)

    def aggregate(n, values, ok):
        good = values[ok]
        count = max(good.shape[0], 1)
        informed = float(np.count_nonzero(np.abs(good[:, 0]) > lambda_threshold)) / count
        classical = float(np.count_nonzero(np.abs(good[:, 1]) > lambda_threshold)) / count
        return {
            "tail_informed": informed,
            "tail_classical": classical,
            "gap": classical - informed,
            "limit_tail_informed": normal_two_sided_tail(lambda_threshold, informed_limit),
            "limit_tail_classical": normal_two_sided_tail(lambda_threshold, var_f),
        }

    return _run("concentration", "concentration", spec, ["informed", "classical"], params, aggregate)


def quantile_limits(spec: ExperimentSpec, alpha: float):
    """Analytic asymptotic variances (informed, classical) of the alpha-quantile."""
    dist = spec.dist
    q = dist.quantile(alpha)
    density = dist.pdf(q)
    cov = population_covariance(dist, spec.g_spec, [Indicator(q)])[:, 0]
    i_tilde = quantile_information(cov, spec.sigma)
    return q, quantile_limit_variance(alpha, density, i_tilde), quantile_limit_variance(alpha, density, 0.0)


def run_quantile_experiment(spec: ExperimentSpec, alpha: float) -> ExperimentResult:
    """``sqrt(n)(q^I - q_alpha)`` and its classical analogue.

    The summary variance of each column is the finite-n version of the
    asymptotic variance reported in ``extra``.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    q, informed_limit, classical_limit = quantile_limits(spec, alpha)

    def aggregate(n, values, ok):
        return {"limit_variance_informed": informed_limit, "limit_variance_classical": classical_limit}

    params = {"alpha": alpha, "q_alpha": q}
    return _run("quantile", "quantile", spec, ["informed", "classical", "monotone_cdf"], params, aggregate)


def run_positivity(spec: ExperimentSpec) -> ExperimentResult:
    """Frequency with which every closed-form weight is positive.

    Replicates where the weights cannot be formed count as not positive.
    """

    def aggregate(n, values, ok):
        positive = np.where(ok, values[:, 1], 0.0)
        freq = float(positive.mean())
        return {"frequency_positive": freq, "standard_error": math.sqrt(freq * (1 - freq) / positive.size)}

    return _run("positivity", "positivity", spec, ["min_weight", "positive"], {}, aggregate)


MEDIAN_SEQUENCE_COLUMNS = ("n", "classical", "informed", "monotone_cdf")


def median_sequence(spec: ExperimentSpec, n: int = 210, alpha: float = 0.5):
    """Classical and informed alpha-quantiles of the first k points of one path,
    for k = m + 1, ..., n.

    Rows where the closed-form weights do not exist carry NaN.
    """
    m = len(spec.g_spec)
    if n < m + 1:
        raise DomainError(f"n must be at least m + 1 = {m + 1}")
    x = spec.dist.sample(uniforms(spec.seed, 0, n, stream=n))
    rows = []
    for k in range(m + 1, n + 1):
        sample = Sample(x[:k])
        classical = informed_quantile(InformedMeasure.empirical(sample), alpha).value
        try:
            w = informed_weights(centered_constraints(spec, sample), spec.solver.rank_rel_tol)
            result = informed_quantile(InformedMeasure(sample, w), alpha)
            rows.append((k, classical, result.value, float(result.monotone_cdf)))
        except InformedMeasureError:
            rows.append((k, classical, math.nan, math.nan))
    return rows
