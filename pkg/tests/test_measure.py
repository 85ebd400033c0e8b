import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from informed_measure.core import ConstraintSet, Indicator, Method, Monomial, Sample, WeightVector
from informed_measure.errors import DomainError, NotPositiveDefinite
from informed_measure.feasibility import check_hull_membership
from informed_measure.measure import (
    InformedMeasure,
    closed_form_expectation,
    empirical_limit_variance,
    informed_ecdf,
    informed_expectation,
    informed_quantile,
    limit_variance,
    normal_two_sided_tail,
    quantile_information,
    quantile_limit_variance,
)
from informed_measure.solvers import informed_weights, solve_empirical_likelihood, solve_exponential_tilt

THREE_X = Sample([-1.0, 0.0, 2.0])
THREE_CS = ConstraintSet([[-1.0], [0.0], [2.0]], [0.0], centered=True)
THREE_P = InformedMeasure(THREE_X, informed_weights(THREE_CS))
NORMAL_MEDIAN_INFO = 1.0 / (2.0 * math.pi)


def _normal_measures(seed, n):
    x = np.random.default_rng(seed).standard_normal(n)
    cs = ConstraintSet(np.column_stack([x, x**2 - 1]), [0.0, 0.0], centered=True)
    sample = Sample(x)
    return sample, cs


# ---------------------------------------------------------------------------
# Expectations
# ---------------------------------------------------------------------------


def test_expectation_examples():
    assert abs(informed_expectation(THREE_P, Monomial(2)) - 9 / 7) <= 1e-12
    assert abs(informed_expectation(THREE_P, Monomial(1))) <= 1e-12
    im = InformedMeasure.empirical(THREE_X)
    assert abs(informed_expectation(im, Monomial(2)) - 5 / 3) <= 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(10, 200))
def test_constraints_recovered_by_every_method(seed, n):
    sample, cs = _normal_measures(seed, n)
    assume(check_hull_membership(cs))
    weights = [
        solve_empirical_likelihood(cs)[0],
        solve_exponential_tilt(cs)[0],
        informed_weights(cs),
    ]
    for w in weights:
        im = InformedMeasure(sample, w)
        assert abs(informed_expectation(im, Monomial(1))) <= 1e-9
        assert abs(informed_expectation(im, lambda x: x**2 - 1)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 300), st.floats(-2, 2))
def test_closed_form_expectation_identity(seed, n, c):
    sample, cs = _normal_measures(seed, n)
    f = Indicator(c)(sample.values)
    im = InformedMeasure(sample, informed_weights(cs))
    assert abs(informed_expectation(im, f) - closed_form_expectation(cs, f)) <= 1e-10


def test_measure_length_mismatch():
    with pytest.raises(DomainError):
        InformedMeasure(Sample([1.0, 2.0]), WeightVector.uniform(3))


# ---------------------------------------------------------------------------
# ECDF
# ---------------------------------------------------------------------------


def test_ecdf_examples():
    assert informed_ecdf(THREE_P, 2.0) == pytest.approx(1.0, abs=1e-12)
    assert informed_ecdf(THREE_P, 50.0) == pytest.approx(1.0, abs=1e-12)
    assert informed_ecdf(THREE_P, -1.0000001) == 0.0
    assert abs(informed_ecdf(THREE_P, 0.0) - 11 / 14) <= 1e-12
    np.testing.assert_allclose(informed_ecdf(THREE_P, [-5.0, -1.0, 1.0]), [0.0, 3 / 7, 11 / 14], atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 100))
def test_ecdf_is_a_right_continuous_step_function(seed, n):
    sample, cs = _normal_measures(seed, n)
    w = informed_weights(cs)
    im = InformedMeasure(sample, w)
    xs = np.sort(sample.values)
    grid = np.sort(np.concatenate([xs, np.random.default_rng(seed).uniform(xs[0] - 1, xs[-1] + 1, 50)]))
    F = informed_ecdf(im, grid)
    if np.min(w.weights) >= 0:
        assert np.all(np.diff(F) >= -1e-12)
    # Right-continuity and jump sizes at the sample points.
    for i, x in enumerate(xs):
        jump = informed_ecdf(im, x) - informed_ecdf(im, np.nextafter(x, -np.inf))
        assert abs(jump - w.weights[np.argsort(sample.values, kind="stable")[i]]) <= 1e-12
        assert informed_ecdf(im, x) == informed_ecdf(im, x + 1e-13 * max(1, abs(x)))
    # Flat between sample points.
    mids = (xs[:-1] + xs[1:]) / 2
    np.testing.assert_allclose(informed_ecdf(im, mids), informed_ecdf(im, xs[:-1]), atol=1e-15)


# ---------------------------------------------------------------------------
# Quantiles
# ---------------------------------------------------------------------------


def test_quantile_examples():
    r = informed_quantile(InformedMeasure.empirical(Sample([1.0, 2.0, 3.0])), 0.5)
    assert r.value == 2.0 and r.crossing_index == 1 and r.monotone_cdf
    r = informed_quantile(THREE_P, 0.5)
    assert r.value == 0.0 and r.crossing_index == 1
    # Cumulative 1/3 + 1/3 must reach 2/3 despite rounding.
    r = informed_quantile(InformedMeasure.empirical(Sample([3.0, 1.0, 2.0])), 2 / 3)
    assert r.value == 2.0


def test_quantile_negative_weights_first_crossing():
    im = InformedMeasure(Sample([1.0, 2.0, 3.0]), WeightVector([0.6, -0.2, 0.6], Method.CLOSED_FORM))
    r = informed_quantile(im, 0.5)
    assert r.value == 1.0 and not r.monotone_cdf
    assert informed_quantile(im, 0.55).value == 1.0
    assert informed_quantile(im, 0.65).value == 3.0


def test_quantile_ties_are_merged():
    im = InformedMeasure.empirical(Sample([2.0, 1.0, 2.0, 2.0]))
    r = informed_quantile(im, 0.3)
    assert r.value == 2.0 and r.crossing_index == 3


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
def test_quantile_alpha_domain(alpha):
    with pytest.raises(DomainError):
        informed_quantile(THREE_P, alpha)


def _weak_orderings(n):
    """Every length-n sequence whose distinct values are exactly 0..k-1."""
    for values in itertools.product(range(n), repeat=n):
        if set(values) == set(range(max(values) + 1)):
            yield values


def _brute_quantile(values, alpha):
    """inf{t : #(x <= t)/n >= alpha}, scanning candidate t in exact arithmetic."""
    n = len(values)
    for t in sorted(set(values)):
        if Fraction(sum(v <= t for v in values), n) >= alpha:
            return t
    raise AssertionError("unreachable")


def _alphas(n):
    out = {Fraction(k, d) for d in (n, 2 * n, 7) for k in range(1, d)}
    return sorted(out)


def test_quantile_brute_force_oracle_exhaustive():
    cases = 0
    for n in range(1, 7):
        alphas = _alphas(n)
        for values in _weak_orderings(n):
            im = InformedMeasure.empirical(Sample(np.array(values, dtype=float)))
            for alpha in alphas:
                got = informed_quantile(im, float(alpha))
                assert got.value == _brute_quantile(values, alpha), (values, alpha)
                cases += 1
    assert cases > 50_000


# ---------------------------------------------------------------------------
# Limit variances
# ---------------------------------------------------------------------------


def test_limit_variance_examples():
    sigma = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert limit_variance([0.0, 0.0], 0.25, sigma) == 0.25
    # f = g_1: the covariance is the first row of sigma.
    assert limit_variance([1.0, 0.0], 1.0, sigma) == 0.0
    assert limit_variance([0.0, 2.0], 2.0, sigma) == 0.0
    phi0 = 1.0 / math.sqrt(2.0 * math.pi)
    got = limit_variance([-phi0, 0.0], 0.25, sigma)
    assert abs(got - (0.25 - 1.0 / (2.0 * math.pi))) <= 1e-15
    assert abs(got - 0.090845) <= 5e-7


def test_limit_variance_monte_carlo_oracle():
    # Var(f - c' Sigma^{-1} g) with population coefficients, from 10^6 draws.
    x = np.random.default_rng(20240601).standard_normal(1_000_000)
    f = (x <= 0).astype(float)
    phi0 = 1.0 / math.sqrt(2.0 * math.pi)
    residual = f + phi0 * x
    mc = float(np.var(residual))
    analytic = limit_variance([-phi0, 0.0], 0.25, np.diag([1.0, 2.0]))
    # Standard error of the variance estimate is about 1e-4.
    assert abs(mc - analytic) <= 6e-4


def test_limit_variance_errors_and_clamp():
    with pytest.raises(NotPositiveDefinite):
        limit_variance([1.0], 1.0, [[0.0]])
    with pytest.raises(DomainError):
        limit_variance([1.0], -1.0, [[1.0]])
    with pytest.raises(DomainError):
        limit_variance([2.0], 1.0, [[1.0]])
    assert limit_variance([1.0], 1.0 - 1e-14, [[1.0]]) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_limit_variance_invariance_and_bound(seed, m):
    rng = np.random.default_rng(seed)
    # Population moments of a random joint law of (g, f).
    B = rng.standard_normal((m + 1, m + 3))
    joint = B @ B.T
    sigma, c, var_f = joint[:m, :m], joint[:m, m], float(joint[m, m])
    A = rng.standard_normal((m, m))
    assume(np.linalg.cond(A) < 1e3)
    base = limit_variance(c, var_f, sigma)
    moved = limit_variance(A.T @ c, var_f, A.T @ sigma @ A)
    assert abs(base - moved) <= 1e-10 * max(1.0, var_f)
    assert base <= var_f


def test_quantile_limit_variance():
    phi0 = 1.0 / math.sqrt(2.0 * math.pi)
    assert quantile_limit_variance(0.5, phi0, 0.0) == pytest.approx(math.pi / 2, abs=1e-12)
    got = quantile_limit_variance(0.5, phi0, NORMAL_MEDIAN_INFO)
    assert abs(got - (math.pi / 2 - 1)) <= 1e-12
    assert abs(got - 0.570796) <= 5e-7
    assert quantile_limit_variance(0.5, 1.0, 0.25) == 0.0
    assert quantile_limit_variance(0.3, 2.0, 0.0) == pytest.approx(0.21 / 4)
    for args in [(0.0, 1.0, 0.0), (0.5, 0.0, 0.0), (0.5, 1.0, 0.3), (0.5, 1.0, -0.1)]:
        with pytest.raises(DomainError):
            quantile_limit_variance(*args)


def test_quantile_information_normal_median():
    phi0 = 1.0 / math.sqrt(2.0 * math.pi)
    assert abs(quantile_information([-phi0, 0.0], np.diag([1.0, 2.0])) - NORMAL_MEDIAN_INFO) <= 1e-15


def test_empirical_limit_variance_consistency():
    sample, cs = _normal_measures(11, 200_000)
    f = (sample.values <= 0).astype(float)
    assert abs(empirical_limit_variance(cs, f) - (0.25 - NORMAL_MEDIAN_INFO)) <= 3e-3
    assert empirical_limit_variance(cs, f) <= float(np.var(f))
    with pytest.raises(DomainError):
        empirical_limit_variance(cs, f[:-1])


def test_normal_tails():
    assert normal_two_sided_tail(0.5, 0.25) == pytest.approx(2 * norm.sf(1.0), rel=1e-12)
    assert abs(normal_two_sided_tail(0.5, 0.25) - 0.3173) <= 1e-4
    assert abs(normal_two_sided_tail(0.5, 0.25 - NORMAL_MEDIAN_INFO) - 0.0971) <= 1e-4
    assert normal_two_sided_tail(0.5, 0.0) == 0.0
