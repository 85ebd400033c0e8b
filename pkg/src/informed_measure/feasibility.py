"""Existence preconditions for the two projections.

Both projections need the target in the convex hull of the rows
``g(X_1), ..., g(X_n)`` and the ones vector to be linearly independent of
the constraint columns.  Hull membership is decided by a phase-I simplex on

    q >= 0,  sum(q) = 1,  G^T q = 0

which is small (m + 1 equality rows) even when n is large.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import ConstraintSet, center
from .errors import DegenerateConstraints, NotCentered, NumericalError

RANK_REL_TOL = 1e-10
_PIVOT_TOL = 1e-11
_FEAS_TOL = 1e-9
# Consecutive degenerate pivots tolerated before switching to Bland's rule.
_STALL_LIMIT = 20


@dataclass(frozen=True)
class FeasibilityReport:
    hull_member: bool
    rank_condition: bool
    effective_rank: int
    kept_columns: tuple[int, ...]

    def to_dict(self):
        d = asdict(self)
        d["kept_columns"] = list(self.kept_columns)
        return d


def _require_centered(cs: ConstraintSet):
    if not cs.centered:
        raise NotCentered("operation requires a centered constraint set (call center() first)")


def _phase_one(A, b, max_iter):
    """Minimise the sum of artificial variables for ``A x = b, x >= 0``.

    ``b`` must be nonnegative.  Returns ``(infeasibility, x)``.
    """
    r, n = A.shape
    T = np.zeros((r, n + r + 1))
    T[:, :n] = A
    T[:, n:n + r] = np.eye(r)
    T[:, -1] = b
    # Reduced costs of the phase-I objective with the artificial basis.
    z = np.zeros(n + r + 1)
    z[:n] = -A.sum(axis=0)
    z[-1] = -b.sum()
    basis = np.arange(n, n + r)

    stalled = 0
    for _ in range(max_iter):
        zc = z[:n]
        if stalled < _STALL_LIMIT:
            e = int(np.argmin(zc))
            if zc[e] >= -_PIVOT_TOL:
                break
        else:
            candidates = np.flatnonzero(zc < -_PIVOT_TOL)
            if candidates.size == 0:
                break
            e = int(candidates[0])
        col = T[:, e]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if rows.size == 0:
            raise NumericalError("phase-I simplex found an unbounded direction")
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + _PIVOT_TOL * max(1.0, abs(best))]
        p = int(ties[np.argmin(basis[ties])])
        stalled = stalled + 1 if best <= _PIVOT_TOL else 0

        T[p] /= T[p, e]
        factors = T[:, e].copy()
        factors[p] = 0.0
        T -= np.outer(factors, T[p])
        z -= z[e] * T[p]
        basis[p] = e
    else:
        raise NumericalError(f"phase-I simplex did not terminate within {max_iter} pivots")

    x = np.zeros(n)
    original = basis < n
    x[basis[original]] = np.maximum(T[original, -1], 0.0)
    return -z[-1], x


def hull_witness(cs: ConstraintSet, max_iter: int | None = None):
    """A point ``q`` of the simplex with ``G^T q = 0``, or ``None`` if none exists."""
    _require_centered(cs)
    G = cs.eval_matrix
    n, m = G.shape
    # Positive column scaling leaves the feasible set unchanged and makes the
    # pivot tolerances scale free.
    scale = np.max(np.abs(G), axis=0)
    scale[scale == 0.0] = 1.0
    A = np.vstack([np.ones(n), (G / scale).T])
    b = np.zeros(m + 1)
    b[0] = 1.0
    if max_iter is None:
        max_iter = 50 * (m + 1) + 500
    infeasibility, q = _phase_one(A, b, max_iter)
    if infeasibility > _FEAS_TOL:
        return None
    return q / q.sum()


def check_hull_membership(cs: ConstraintSet, max_iter: int | None = None) -> bool:
    """True iff 0 lies in the convex hull of the centered constraint rows."""
    return hull_witness(cs, max_iter) is not None


def _rank(M, rel_tol):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def _with_ones(G):
    return np.column_stack([np.ones(G.shape[0]), G])


def check_rank_condition(cs: ConstraintSet, rel_tol: float = RANK_REL_TOL) -> bool:
    """True iff ``rank([1 | G]) == m + 1``."""
    return _rank(_with_ones(cs.eval_matrix), rel_tol) == cs.m + 1


def independent_columns(cs: ConstraintSet, rel_tol: float = RANK_REL_TOL) -> list[int]:
    """Greedy left-to-right selection of columns independent of the ones vector
    and of the columns already kept."""
    G = cs.eval_matrix
    kept: list[int] = []
    for j in range(cs.m):
        trial = _with_ones(G[:, kept + [j]])
        if _rank(trial, rel_tol) == len(kept) + 2:
            kept.append(j)
    return kept


def deduplicate_constraints(cs: ConstraintSet, rel_tol: float = RANK_REL_TOL):
    """Drop redundant constraints.

    Returns the restricted constraint set and the kept column indices.  For a
    feasible centered set the dropped columns are linear combinations of the
    kept ones, so weights solving the restricted problem satisfy every
    original constraint.
    """
    _require_centered(cs)
    kept = independent_columns(cs, rel_tol)
    if not kept:
        raise DegenerateConstraints("no constraint column is linearly independent of the constants")
    return cs.select(kept), kept


def feasibility_report(cs: ConstraintSet, rel_tol: float = RANK_REL_TOL) -> FeasibilityReport:
    """Run every precondition check.  Uncentered input is centered first.

    ``effective_rank`` counts the kept columns, i.e. ``rank([1 | G]) - 1``;
    for a centered set whose target is in the hull this equals the dimension
    of the span of the constraint columns.
    """
    cs = center(cs)
    kept = independent_columns(cs, rel_tol)
    return FeasibilityReport(
        hull_member=check_hull_membership(cs),
        rank_condition=check_rank_condition(cs, rel_tol),
        effective_rank=len(kept),
        kept_columns=tuple(kept),
    )
