"""Functionals of a reweighted sample: expectations, ECDF, quantiles, and the
asymptotic variances that auxiliary information buys."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import ConstraintSet, Sample, WeightVector, evaluate_function
from .errors import DomainError
from .linalg import spd_solve
from .solvers import empirical_variance

# Slack on the cumulative-sum crossing test; absorbs summation rounding so that
# e.g. three weights of 1/3 reach alpha = 2/3.
_CROSSING_TOL = 1e-12
_CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class InformedMeasure:
    """Discrete measure ``sum_i w_i delta_{X_i}`` on the sample points."""

    sample: Sample
    weights: WeightVector

    def __post_init__(self):
        if len(self.sample) != len(self.weights):
            raise DomainError(f"sample has {len(self.sample)} points but {len(self.weights)} weights were given")

    @classmethod
    def empirical(cls, sample: Sample) -> InformedMeasure:
        return cls(sample, WeightVector.uniform(len(sample)))

    @property
    def method(self):
        return self.weights.method

    def _sorted_cumulative(self):
        order = np.argsort(self.sample.values, kind="stable")
        return self.sample.values[order], np.cumsum(self.weights.weights[order])


@dataclass(frozen=True)
class QuantileResult:
    alpha: float
    value: float
    crossing_index: int
    monotone_cdf: bool

    def to_dict(self):
        return asdict(self)


def informed_expectation(im: InformedMeasure, f) -> float:
    """``sum_i w_i f(X_i)``; ``f`` is a function spec, a callable or an array of values."""
    values = evaluate_function(im.sample, f)
    return float(im.weights.weights @ values)


def informed_ecdf(im: InformedMeasure, t):
    """``F(t) = sum_i w_i 1{X_i <= t}``; vectorised over ``t``."""
    xs, cum = im._sorted_cumulative()
    idx = np.searchsorted(xs, np.asarray(t, dtype=float), side="right")
    out = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    return float(out) if out.ndim == 0 else out


def informed_quantile(im: InformedMeasure, alpha: float) -> QuantileResult:
    """``inf{t : F(t) >= alpha}`` for the weighted ECDF.

    Tied sample values are merged before the search.  With negative weights
    the cumulative sum can be non-monotone; the first crossing is returned and
    ``monotone_cdf`` is false.
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    order = np.argsort(im.sample.values, kind="stable")
    xs = im.sample.values[order]
    support, first, counts = np.unique(xs, return_index=True, return_counts=True)
    merged = np.add.reduceat(im.weights.weights[order], first)
    cum = np.cumsum(merged)
    hits = np.flatnonzero(cum >= alpha - _CROSSING_TOL)
    k = int(hits[0]) if hits.size else support.size - 1
    return QuantileResult(
        alpha=float(alpha),
        value=float(support[k]),
        crossing_index=int(first[k] + counts[k] - 1),
        monotone_cdf=bool(np.min(im.weights.weights) >= 0),
    )


def limit_variance(cov_gf, var_f: float, sigma) -> float:
    """Asymptotic variance of the informed empirical process at ``f``:
    ``var_f - cov_gf^T sigma^{-1} cov_gf``."""
    if var_f < 0:
        raise DomainError(f"var_f must be nonnegative, got {var_f!r}")
    c = np.atleast_1d(np.asarray(cov_gf, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    gain = float(c @ spd_solve(sigma, c))
    out = var_f - max(gain, 0.0)
    if out < 0:
        if out < -_CLAMP_TOL * max(1.0, var_f):
            raise DomainError("cov_gf is inconsistent with var_f and sigma (negative limit variance)")
        out = 0.0
    return out


def quantile_limit_variance(alpha: float, density_at_q: float, i_tilde: float) -> float:
    """``(alpha (1 - alpha) - i_tilde) / density_at_q**2``."""
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if not density_at_q > 0:
        raise DomainError(f"density at the quantile must be positive, got {density_at_q!r}")
    bernoulli = alpha * (1.0 - alpha)
    if i_tilde < -_CLAMP_TOL or i_tilde > bernoulli + _CLAMP_TOL:
        raise DomainError(f"i_tilde must lie in [0, alpha(1-alpha)] = [0, {bernoulli}], got {i_tilde!r}")
    return max(bernoulli - i_tilde, 0.0) / density_at_q**2


def quantile_information(cov_g_indicator, sigma) -> float:
    """The term subtracted from ``alpha (1 - alpha)``:
    ``c^T sigma^{-1} c`` with ``c = cov(g, 1{x <= q_alpha})``."""
    c = np.atleast_1d(np.asarray(cov_g_indicator, dtype=float))
    return float(c @ spd_solve(np.atleast_2d(sigma), c))


def empirical_limit_variance(cs: ConstraintSet, f_values) -> float:
    """Plug-in version of :func:`limit_variance` from sample moments."""
    G = cs.eval_matrix
    f = np.asarray(f_values, dtype=float)
    if f.shape != (G.shape[0],):
        raise DomainError(f"f_values has shape {f.shape}, expected ({G.shape[0]},)")
    fc = f - f.mean()
    cov = (G - G.mean(axis=0)).T @ fc / f.size
    var_f = float(fc @ fc / f.size)
    return limit_variance(cov, var_f, empirical_variance(G))


def closed_form_expectation(cs: ConstraintSet, f_values) -> float:
    """``P_n f - cov_n(g, f)^T S^{-1} P_n g``, the mean of ``f`` under the
    closed-form weights written without forming the weights."""
    G = cs.eval_matrix
    f = np.asarray(f_values, dtype=float)
    gbar = G.mean(axis=0)
    cov = (G - gbar).T @ (f - f.mean()) / f.size
    return float(f.mean() - cov @ spd_solve(empirical_variance(G), gbar))


def normal_two_sided_tail(threshold: float, variance: float) -> float:
    """``P(|N(0, variance)| > threshold)``."""
    if variance <= 0:
        return 0.0
    return math.erfc(threshold / math.sqrt(2.0 * variance))
