"""Shared domain types: samples, constraint matrices, weight vectors.

A constraint set stores the evaluation matrix ``G[i, j] = g_j(X_i)`` together
with the known expectations ``Pg``.  Every solver works on *centered*
constraints, i.e. ``G - Pg`` with a zero target.
"""

from __future__ import annotations

import csv
import enum
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AlreadyCentered, DomainError, EvaluationError

WEIGHT_SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-9

MAX_MONOMIAL_DEGREE = 8


def _frozen_array(values, ndim):
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise DomainError(f"expected a {ndim}-dimensional array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


# ---------------------------------------------------------------------------
# Function vocabulary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Monomial:
    """``x -> x**degree`` for ``degree`` in 1..8."""

    degree: int

    def __post_init__(self):
        if not 1 <= self.degree <= MAX_MONOMIAL_DEGREE:
            raise DomainError(f"monomial degree must be in 1..{MAX_MONOMIAL_DEGREE}, got {self.degree}")

    def __call__(self, x):
        return np.asarray(x, dtype=float) ** self.degree

    @property
    def label(self) -> str:
        return "x" if self.degree == 1 else f"x^{self.degree}"


@dataclass(frozen=True)
class Indicator:
    """``x -> 1{x <= threshold}``."""

    threshold: float

    def __call__(self, x):
        return (np.asarray(x, dtype=float) <= self.threshold).astype(float)

    @property
    def label(self) -> str:
        return f"ind(x<={self.threshold:g})"


@dataclass(frozen=True)
class Callback:
    """Arbitrary vectorised user function (library API only)."""

    func: Callable[[np.ndarray], np.ndarray]
    name: str = "f"

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    @property
    def label(self) -> str:
        return self.name


FunctionSpec = Monomial | Indicator | Callback

_TERM_RE = re.compile(
    r"""^(?:
        x(?:\^(?P<deg>\d+))?                      # x or x^k
      | ind\(\s*x\s*<=\s*(?P<thr>[^()\s]+)\s*\)   # ind(x<=c)
    )$""",
    re.VERBOSE,
)


def parse_function_spec(term: str) -> FunctionSpec:
    """Parse one term of the ``x^k`` / ``ind(x<=c)`` mini-grammar."""
    match = _TERM_RE.match(term.strip())
    if match is None:
        raise DomainError(f"cannot parse function term {term!r}; expected x, x^k or ind(x<=c)")
    if match.group("thr") is not None:
        try:
            threshold = float(match.group("thr"))
        except ValueError:
            raise DomainError(f"bad indicator threshold in {term!r}") from None
        if not math.isfinite(threshold):
            raise DomainError(f"indicator threshold must be finite in {term!r}")
        return Indicator(threshold)
    degree = int(match.group("deg")) if match.group("deg") else 1
    return Monomial(degree)


def parse_function_specs(text: str) -> list[FunctionSpec]:
    """Parse a comma-separated list such as ``"x,x^2,ind(x<=0)"``."""
    terms = [t for t in text.split(",") if t.strip()]
    if not terms:
        raise DomainError("empty function list")
    return [parse_function_spec(t) for t in terms]


def parse_vector(text: str) -> np.ndarray:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise DomainError(f"cannot parse numeric list {text!r}") from None
    if not values:
        raise DomainError("empty numeric list")
    return np.array(values)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sample:
    values: np.ndarray

    def __post_init__(self):
        values = _frozen_array(self.values, 1)
        if values.size < 1:
            raise DomainError("a sample needs at least one observation")
        if not np.all(np.isfinite(values)):
            raise DomainError("sample contains non-finite values")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ConstraintSet:
    """Evaluation matrix of the constraint functions plus their known means.

    Invariants: ``m >= 1``, ``n >= m + 1``, all entries finite, and a zero
    target whenever ``centered`` is true.
    """

    eval_matrix: np.ndarray
    target: np.ndarray
    centered: bool = False

    def __post_init__(self):
        G = _frozen_array(self.eval_matrix, 2)
        target = _frozen_array(self.target, 1)
        n, m = G.shape
        if m < 1:
            raise DomainError("at least one constraint is required")
        if n < m + 1:
            raise DomainError(f"need n >= m + 1 observations, got n={n}, m={m}")
        if target.size != m:
            raise DomainError(f"target has length {target.size}, expected {m}")
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(target))):
            raise DomainError("constraint set contains non-finite values")
        if self.centered and np.any(target != 0.0):
            raise DomainError("a centered constraint set must have a zero target")
        object.__setattr__(self, "eval_matrix", G)
        object.__setattr__(self, "target", target)

    @property
    def n(self) -> int:
        return self.eval_matrix.shape[0]

    @property
    def m(self) -> int:
        return self.eval_matrix.shape[1]

    def select(self, columns: Sequence[int]) -> ConstraintSet:
        columns = list(columns)
        return ConstraintSet(self.eval_matrix[:, columns], self.target[columns], self.centered)

    def permute(self, order: Sequence[int]) -> ConstraintSet:
        return ConstraintSet(self.eval_matrix[list(order)], self.target, self.centered)


class Method(str, enum.Enum):
    UNIFORM = "uniform"
    EMPIRICAL_LIKELIHOOD = "empirical_likelihood"
    EXPONENTIAL_TILT = "exponential_tilt"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class WeightVector:
    """Probability mass per observation, tagged with how it was produced.

    Closed-form weights may be negative; the two projection methods always
    produce strictly positive weights.
    """

    weights: np.ndarray
    method: Method
    sum_tol: float = field(default=WEIGHT_SUM_TOL, repr=False, compare=False)

    def __post_init__(self):
        w = _frozen_array(self.weights, 1)
        method = Method(self.method)
        if not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite")
        total = math.fsum(w)
        if abs(total - 1.0) > self.sum_tol:
            raise DomainError(f"weights sum to {total!r}, not 1")
        if method in (Method.EMPIRICAL_LIKELIHOOD, Method.EXPONENTIAL_TILT) and np.any(w <= 0):
            raise DomainError(f"{method.value} weights must be strictly positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "method", method)

    @classmethod
    def uniform(cls, n: int) -> WeightVector:
        return cls(np.full(n, 1.0 / n), Method.UNIFORM)

    def __len__(self):
        return self.weights.size

    def residual(self, cs: ConstraintSet) -> float:
        """Sup-norm violation ``|sum_i w_i G_i - target|``."""
        return float(np.max(np.abs(self.weights @ cs.eval_matrix - self.target)))


@dataclass(frozen=True)
class SolveReport:
    """Diagnostics of a dual solve.

    ``history`` holds every accepted multiplier iterate, starting at 0, so the
    feasibility-region and curvature invariants can be audited afterwards.
    """

    lambda_: np.ndarray
    iterations: int
    grad_norm: float
    residual: float
    converged: bool
    boundary: bool = False
    history: tuple = ()


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def evaluate_constraints(sample: Sample, g_spec: Sequence[FunctionSpec], target) -> ConstraintSet:
    """Materialise ``G[i, j] = g_j(X_i)`` as an uncentered constraint set."""
    x = sample.values
    columns = []
    for j, g in enumerate(g_spec):
        with np.errstate(all="ignore"):
            col = np.broadcast_to(np.asarray(g(x), dtype=float), x.shape)
        bad = np.flatnonzero(~np.isfinite(col))
        if bad.size:
            i = int(bad[0])
            raise EvaluationError(f"g[{j}] is not finite at observation {i} (x={x[i]!r})", row=i, column=j)
        columns.append(col)
    if not columns:
        raise DomainError("at least one constraint function is required")
    return ConstraintSet(np.column_stack(columns), np.asarray(target, dtype=float), centered=False)


def center(cs: ConstraintSet, strict: bool = False) -> ConstraintSet:
    """Subtract the target from each column so that the target becomes 0.

    Centering an already centered set is a no-op unless ``strict`` is set, in
    which case :class:`AlreadyCentered` is raised.
    """
    if cs.centered:
        if strict:
            raise AlreadyCentered("constraint set is already centered")
        return cs
    return ConstraintSet(cs.eval_matrix - cs.target, np.zeros(cs.m), centered=True)


def evaluate_function(sample: Sample, f) -> np.ndarray:
    """Values of ``f`` on the sample; ``f`` may also be a precomputed array."""
    if callable(f):
        with np.errstate(all="ignore"):
            values = np.broadcast_to(np.asarray(f(sample.values), dtype=float), sample.values.shape)
    else:
        values = np.asarray(f, dtype=float)
        if values.shape != sample.values.shape:
            raise DomainError(f"function values have shape {values.shape}, expected {sample.values.shape}")
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise EvaluationError(f"function is not finite at observation {int(bad[0])}", row=int(bad[0]))
    return values


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def read_sample(path) -> Sample:
    """One observation per line, plain decimal text; blank lines are skipped."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise DomainError(f"{path}:{lineno}: not a number: {text!r}") from None
    return Sample(np.array(values))


def write_sample(path, sample: Sample) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in sample.values:
            fh.write(f"{float(v)!r}\n")


def read_constraint_csv(path) -> tuple[np.ndarray, list[str]]:
    """Read a constraint evaluation matrix stored as CSV with a header row."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError(f"{path}: empty constraint file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    try:
        matrix = np.array([[float(v) for v in r] for r in body])
    except ValueError:
        raise DomainError(f"{path}: non-numeric entry in constraint matrix") from None
    if matrix.ndim != 2 or matrix.shape[1] != len(header):
        raise DomainError(f"{path}: rows do not match the {len(header)}-column header")
    return matrix, header


def write_constraint_csv(path, matrix, header: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in np.asarray(matrix, dtype=float):
            writer.writerow([repr(float(v)) for v in row])
