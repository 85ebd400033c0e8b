"""Reweight an i.i.d. sample so that it reproduces known expectations.

Three constructions are provided: the empirical-likelihood projection, the
exponential-tilting projection, and closed-form informed weights that
approximate both.
"""

from .core import (
    Callback,
    ConstraintSet,
    Indicator,
    Method,
    Monomial,
    Sample,
    SolveReport,
    WeightVector,
    center,
    evaluate_constraints,
    parse_function_specs,
)
from .errors import (
    DegenerateConstraints,
    DomainError,
    EvaluationError,
    InfeasibleConstraints,
    InformedMeasureError,
    NoConvergence,
    NotPositiveDefinite,
    NumericalError,
    RankDeficient,
    SingularVariance,
)
from .feasibility import (
    FeasibilityReport,
    check_hull_membership,
    check_rank_condition,
    deduplicate_constraints,
    feasibility_report,
)
from .linalg import spd_solve
from .measure import (
    InformedMeasure,
    QuantileResult,
    informed_ecdf,
    informed_expectation,
    informed_quantile,
    limit_variance,
    quantile_limit_variance,
)
from .solvers import (
    SolverConfig,
    compute_weights,
    informed_weights,
    solve_empirical_likelihood,
    solve_exponential_tilt,
)

__version__ = "0.1.0"
