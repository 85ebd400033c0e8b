"""Built-in sampling distributions with closed-form moments.

Sampling is by inverse CDF so that a stream of uniforms maps to a fixed
sample.  The moment helpers give exact population values of ``E[f h]`` for
monomials and indicators, which is all the experiments need: the known
target ``Pg``, the variance ``Sigma`` of ``g`` and covariances with a test
function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from ..core import Callback, Indicator, Monomial
from ..errors import DomainError


@dataclass(frozen=True)
class Distribution:
    name: str
    inverse_cdf: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[float], float]
    pdf: Callable[[float], float]
    moment: Callable[[int], float]
    # E[X^k 1{X <= c}]
    partial_moment: Callable[[int, float], float]
    # Law-preserving reflection used for antithetic samples, if any.
    reflect: Callable[[np.ndarray], np.ndarray] | None = None

    def sample(self, u):
        return self.inverse_cdf(np.asarray(u, dtype=float))

    def quantile(self, alpha: float) -> float:
        return float(self.inverse_cdf(np.asarray(alpha, dtype=float)))


def _normal_moment(k):
    return 0.0 if k % 2 else float(math.prod(range(k - 1, 0, -2)))


def _normal_partial(k, c):
    phi = math.exp(-0.5 * c * c) / math.sqrt(2.0 * math.pi)
    lower = [float(special.ndtr(c)), -phi]
    for j in range(2, k + 1):
        lower.append(-(c ** (j - 1)) * phi + (j - 1) * lower[j - 2])
    return lower[k]


def _uniform_partial(k, c):
    c = min(max(c, 0.0), 1.0)
    return c ** (k + 1) / (k + 1)


def _exponential_partial(k, c):
    if c <= 0:
        return 0.0
    return math.gamma(k + 1) * float(special.gammainc(k + 1, c))


STD_NORMAL = Distribution(
    name="std_normal",
    inverse_cdf=special.ndtri,
    cdf=lambda c: float(special.ndtr(c)),
    pdf=lambda x: math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi),
    moment=_normal_moment,
    partial_moment=_normal_partial,
    reflect=np.negative,
)

UNIFORM01 = Distribution(
    name="uniform01",
    inverse_cdf=lambda u: u,
    cdf=lambda c: min(max(c, 0.0), 1.0),
    pdf=lambda x: 1.0 if 0.0 <= x <= 1.0 else 0.0,
    moment=lambda k: 1.0 / (k + 1),
    partial_moment=_uniform_partial,
    reflect=lambda x: 1.0 - x,
)

EXPONENTIAL1 = Distribution(
    name="exponential1",
    inverse_cdf=lambda u: -np.log1p(-u),
    cdf=lambda c: 0.0 if c <= 0 else -math.expm1(-c),
    pdf=lambda x: math.exp(-x) if x >= 0 else 0.0,
    moment=lambda k: float(math.factorial(k)),
    partial_moment=_exponential_partial,
)

DISTRIBUTIONS = {d.name: d for d in (STD_NORMAL, UNIFORM01, EXPONENTIAL1)}


def get_distribution(name) -> Distribution:
    if isinstance(name, Distribution):
        return name
    try:
        return DISTRIBUTIONS[name]
    except KeyError:
        raise DomainError(f"unknown distribution {name!r}; choose from {sorted(DISTRIBUTIONS)}") from None


def expect_product(dist: Distribution, f=None, h=None) -> float:
    """Exact ``E[f(X) h(X)]``; ``None`` stands for the constant 1."""
    terms = [t for t in (f, h) if t is not None]
    if any(isinstance(t, Callback) for t in terms):
        raise DomainError("no closed-form moments for callback functions")
    degree = sum(t.degree for t in terms if isinstance(t, Monomial))
    thresholds = [t.threshold for t in terms if isinstance(t, Indicator)]
    if not thresholds:
        return 1.0 if degree == 0 else dist.moment(degree)
    c = min(thresholds)
    return dist.cdf(c) if degree == 0 else dist.partial_moment(degree, c)


def population_mean(dist, funcs) -> np.ndarray:
    dist = get_distribution(dist)
    return np.array([expect_product(dist, f) for f in funcs])


def population_covariance(dist, funcs_a, funcs_b) -> np.ndarray:
    dist = get_distribution(dist)
    mean_a = population_mean(dist, funcs_a)
    mean_b = population_mean(dist, funcs_b)
    second = np.array([[expect_product(dist, a, b) for b in funcs_b] for a in funcs_a])
    return second - np.outer(mean_a, mean_b)


def population_variance(dist, funcs) -> np.ndarray:
    return population_covariance(dist, funcs, funcs)
