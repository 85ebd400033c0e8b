"""Command-line front end.

stdout carries data only (CSV or JSON); diagnostics go to stderr.  Exit codes:
0 on success, 1 on a domain or numerical error (reported as one JSON line on
stderr), 2 on a usage error.

Every subcommand accepts ``--config FILE``, a flat ``key=value`` text file whose
keys are long option names; options given on the command line win.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import sys

import numpy as np

from .core import (
    ConstraintSet,
    WeightVector,
    center,
    evaluate_constraints,
    parse_function_spec,
    parse_function_specs,
    parse_vector,
    read_constraint_csv,
    read_sample,
)
from .errors import DomainError, InformedMeasureError
from .feasibility import deduplicate_constraints, feasibility_report
from .measure import InformedMeasure, informed_ecdf, informed_quantile
from .montecarlo import experiments as mc
from .montecarlo.distributions import DISTRIBUTIONS, get_distribution
from .montecarlo.io import _fmt, write_median_sequence_csv, write_records_csv, write_summary_json
from .solvers import SolverConfig, informed_weights, solve_empirical_likelihood, solve_exponential_tilt

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

EXPERIMENTS = ("lambda", "closeness", "variance", "concentration", "quantile", "positivity")
WEIGHT_COLUMNS = {"el": "w_el", "tilt": "w_tilt", "closed": "w_closed"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _int_list(text):
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty integer list")
    return values


def _probability(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {text}")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _add_common(p):
    p.add_argument("--config", metavar="FILE", help="key=value defaults; command-line flags override")


def _add_inputs(p, sample_required):
    p.add_argument("--sample", metavar="FILE", required=sample_required, help="one observation per line")
    p.add_argument("--g", metavar="SPEC", help='constraint functions, e.g. "x,x^2,ind(x<=0)"')
    p.add_argument("--constraints", metavar="CSV", help="precomputed evaluation matrix with header row")
    p.add_argument("--target", metavar="VEC", help="known expectations, comma-separated (default 0)")


def _add_solver(p):
    g = p.add_argument_group("solver")
    g.add_argument("--grad-tol", type=_positive_float, default=1e-10)
    g.add_argument("--max-iter", type=_positive_int, default=100)
    g.add_argument("--backtrack-factor", type=_probability, default=0.5)
    g.add_argument("--min-step", type=_positive_float, default=1e-14)
    g.add_argument("--rank-rel-tol", type=_positive_float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="informed-measure",
        description="Reweight a sample so that it reproduces known expectations.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("feasibility", help="hull membership, rank condition and kept columns (JSON)")
    _add_common(p)
    _add_inputs(p, sample_required=False)
    p.add_argument("--rank-rel-tol", type=_positive_float, default=1e-10)

    p = sub.add_parser("weights", help="informed weights as CSV")
    _add_common(p)
    _add_inputs(p, sample_required=True)
    p.add_argument("--method", choices=("el", "tilt", "closed", "all"), default="all")
    p.add_argument("--dedup", action="store_true", help="drop redundant constraints before solving")
    _add_solver(p)

    p = sub.add_parser("ecdf", help="classical and informed ECDF on a grid (CSV)")
    _add_common(p)
    _add_inputs(p, sample_required=True)
    p.add_argument("--method", choices=("el", "tilt", "closed"), default="closed")
    p.add_argument("--dist", choices=sorted(DISTRIBUTIONS), help="add the true CDF as column F")
    p.add_argument("--points", type=_positive_int, default=201, help="grid size over the padded sample range")
    p.add_argument("--t", metavar="VEC", help="explicit evaluation points (overrides --points)")
    _add_solver(p)

    p = sub.add_parser("quantile", help="informed alpha-quantile (JSON)")
    _add_common(p)
    _add_inputs(p, sample_required=True)
    p.add_argument("--alpha", type=_probability, required=True)
    p.add_argument("--method", choices=("el", "tilt", "closed", "uniform"), default="closed")
    _add_solver(p)

    p = sub.add_parser("simulate", help="seeded Monte Carlo experiments")
    p.add_argument("experiment", choices=EXPERIMENTS)
    _add_common(p)
    p.add_argument("--dist", choices=sorted(DISTRIBUTIONS), default="std_normal")
    p.add_argument("--g", metavar="SPEC", default="x,x^2")
    p.add_argument("--f", metavar="TERM", default="ind(x<=0)", help="test function")
    p.add_argument("--n", metavar="LIST", type=_int_list, default=[100, 1000])
    p.add_argument("--reps", type=_positive_int, default=1000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threshold", type=_positive_float, default=0.5, help="tail threshold (concentration)")
    p.add_argument("--alpha", type=_probability, default=0.5, help="quantile level (quantile)")
    p.add_argument("--antithetic", action="store_true", help="pair each draw with its reflection")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--out", metavar="CSV", help="per-replicate records (default stdout)")
    p.add_argument("--summary", metavar="JSON", help="per-n summary")
    p.add_argument("--sequence", metavar="CSV", help="single-path median sequence (quantile)")
    p.add_argument("--sequence-n", type=_positive_int, default=210)
    _add_solver(p)
    return parser


def _read_config(path) -> dict:
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            key, sep, value = text.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _config_defaults(subparser, values) -> dict:
    actions = {a.dest: a for a in subparser._actions if a.option_strings}
    defaults = {}
    for key, text in values.items():
        action = actions.get(key)
        if action is None or key == "config":
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"config key {key!r} expects a boolean, got {text!r}")
            defaults[key] = lowered in ("true", "1", "yes")
            continue
        if action.choices is not None and text not in action.choices:
            raise UsageError(f"config key {key!r}: {text!r} is not one of {sorted(action.choices)}")
        try:
            defaults[key] = action.type(text) if action.type else text
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
    return defaults


def _config_path(argv):
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if token.startswith("--config="):
            return token.partition("=")[2]
    return None


def parse_args(argv=None) -> argparse.Namespace:
    """Parse and validate; exits with status 2 on bad usage."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    path = _config_path(argv)
    command = next((t for t in argv if t in COMMANDS), None)
    if path is not None and command is not None:
        subparser = parser._subparsers._group_actions[0].choices[command]
        try:
            defaults = _config_defaults(subparser, _read_config(path))
        except UsageError as exc:
            subparser.error(str(exc))
        # Required options may come from the file.
        for action in subparser._actions:
            if action.dest in defaults:
                action.required = False
        subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# Input assembly
# ---------------------------------------------------------------------------


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        grad_tol=args.grad_tol,
        max_iter=args.max_iter,
        backtrack_factor=args.backtrack_factor,
        min_step=args.min_step,
        rank_rel_tol=args.rank_rel_tol,
    )


def _load_sample(args):
    if args.sample is None:
        return None
    try:
        return read_sample(args.sample)
    except OSError as exc:
        raise UsageError(f"cannot read sample {args.sample}: {exc.strerror}") from None


def _load_constraints(args, sample):
    if (args.g is None) == (args.constraints is None):
        raise UsageError("give exactly one of --g and --constraints")
    if args.g is not None:
        if sample is None:
            raise UsageError("--g needs --sample")
        specs = parse_function_specs(args.g)
        target = parse_vector(args.target) if args.target else np.zeros(len(specs))
        return evaluate_constraints(sample, specs, target)
    try:
        matrix, _ = read_constraint_csv(args.constraints)
    except OSError as exc:
        raise UsageError(f"cannot read constraints {args.constraints}: {exc.strerror}") from None
    if sample is not None and matrix.shape[0] != len(sample):
        raise DomainError(f"constraint file has {matrix.shape[0]} rows but the sample has {len(sample)} values")
    target = parse_vector(args.target) if args.target else np.zeros(matrix.shape[1])
    return ConstraintSet(matrix, target)


def _weights(method, cs, config) -> WeightVector:
    if method == "el":
        return solve_empirical_likelihood(cs, config)[0]
    if method == "tilt":
        return solve_exponential_tilt(cs, config)[0]
    if method == "closed":
        return informed_weights(cs, config.rank_rel_tol)
    return WeightVector.uniform(cs.n)


def _measure(args, sample):
    cs = center(_load_constraints(args, sample))
    return InformedMeasure(sample, _weights(args.method, cs, _solver_config(args)))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_feasibility(args, out):
    cs = _load_constraints(args, _load_sample(args))
    report = feasibility_report(cs, args.rank_rel_tol)
    out.write(json.dumps(report.to_dict()) + "\n")


def _cmd_weights(args, out):
    sample = _load_sample(args)
    cs = center(_load_constraints(args, sample))
    if args.dedup:
        cs, _ = deduplicate_constraints(cs, args.rank_rel_tol)
    config = _solver_config(args)
    methods = list(WEIGHT_COLUMNS) if args.method == "all" else [args.method]
    columns = [_weights(m, cs, config).weights for m in methods]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["index", "x", *(WEIGHT_COLUMNS[m] for m in methods)])
    for i, x in enumerate(sample.values):
        writer.writerow([i, _fmt(x), *(_fmt(c[i]) for c in columns)])


def _cmd_ecdf(args, out):
    sample = _load_sample(args)
    im = _measure(args, sample)
    if args.t:
        grid = parse_vector(args.t)
    else:
        lo, hi = float(sample.values.min()), float(sample.values.max())
        pad = 0.1 * (hi - lo) if hi > lo else 1.0
        grid = np.linspace(lo - pad, hi + pad, args.points)
    classical = informed_ecdf(InformedMeasure.empirical(sample), grid)
    informed = informed_ecdf(im, grid)
    header = ["t", "F_n", "F_nI"]
    truth = None
    if args.dist:
        dist = get_distribution(args.dist)
        truth = [dist.cdf(float(t)) for t in grid]
        header.append("F")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for j, t in enumerate(grid):
        row = [_fmt(t), _fmt(classical[j]), _fmt(informed[j])]
        if truth is not None:
            row.append(_fmt(truth[j]))
        writer.writerow(row)


def _cmd_quantile(args, out):
    sample = _load_sample(args)
    if args.method == "uniform":
        im = InformedMeasure.empirical(sample)
    else:
        im = _measure(args, sample)
    result = informed_quantile(im, args.alpha).to_dict()
    result["method"] = im.method.value
    out.write(json.dumps(result) + "\n")


@contextlib.contextmanager
def _open_out(path, default):
    if path is None:
        yield default
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None
    with fh:
        yield fh


def _cmd_simulate(args, out):
    spec = mc.ExperimentSpec(
        distribution=args.dist,
        g_spec=parse_function_specs(args.g),
        n_grid=args.n,
        replicates=args.reps,
        seed=args.seed,
        test_function=parse_function_spec(args.f),
        antithetic=args.antithetic,
        solver=_solver_config(args),
        workers=args.workers,
    )
    kind = args.experiment
    if kind == "lambda":
        result = mc.run_lambda_expansion(spec)
    elif kind == "closeness":
        result = mc.run_weight_closeness(spec)
    elif kind == "variance":
        result = mc.run_variance_reduction(spec)
    elif kind == "concentration":
        result = mc.run_concentration(spec, args.threshold)
    elif kind == "quantile":
        result = mc.run_quantile_experiment(spec, args.alpha)
    else:
        result = mc.run_positivity(spec)
    with _open_out(args.out, out) as fh:
        write_records_csv(result, fh)
    if args.summary:
        with _open_out(args.summary, out) as fh:
            write_summary_json(result, fh)
    if args.sequence:
        rows = mc.median_sequence(spec, args.sequence_n, args.alpha)
        with _open_out(args.sequence, out) as fh:
            write_median_sequence_csv(rows, fh)
    for n, r in result.per_n.items():
        if r.failures:
            print(f"n={n}: {r.failures}/{r.replicates} replicates failed", file=sys.stderr)


COMMANDS = {
    "feasibility": _cmd_feasibility,
    "weights": _cmd_weights,
    "ecdf": _cmd_ecdf,
    "quantile": _cmd_quantile,
    "simulate": _cmd_simulate,
}


def _error_line(exc) -> str:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    report = getattr(exc, "report", None)
    if report is not None:
        payload["iterations"] = report.iterations
    return json.dumps(payload)


def dispatch(args, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"informed-measure {args.command}: error: {exc}\n")
        return EXIT_USAGE
    except InformedMeasureError as exc:
        err.write(_error_line(exc) + "\n")
        return EXIT_DOMAIN
    return EXIT_OK


def main(argv=None) -> int:
    args = parse_args(argv)
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
