"""Seeded Monte Carlo experiments."""

from .distributions import DISTRIBUTIONS, get_distribution, population_covariance, population_mean, population_variance
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    Summary,
    draw_sample,
    is_strictly_decreasing,
    median_sequence,
    quantile_limits,
    run_concentration,
    run_lambda_expansion,
    run_positivity,
    run_quantile_experiment,
    run_variance_reduction,
    run_weight_closeness,
)
from .io import write_median_sequence_csv, write_records_csv, write_summary_json
from .rng import uniforms

__all__ = [
    "DISTRIBUTIONS",
    "ExperimentResult",
    "ExperimentSpec",
    "Summary",
    "draw_sample",
    "get_distribution",
    "is_strictly_decreasing",
    "median_sequence",
    "population_covariance",
    "population_mean",
    "population_variance",
    "quantile_limits",
    "run_concentration",
    "run_lambda_expansion",
    "run_positivity",
    "run_quantile_experiment",
    "run_variance_reduction",
    "run_weight_closeness",
    "uniforms",
    "write_median_sequence_csv",
    "write_records_csv",
    "write_summary_json",
]
