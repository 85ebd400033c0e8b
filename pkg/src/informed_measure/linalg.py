"""Small dense symmetric positive-definite solves."""

import numpy as np
import scipy.linalg

from .errors import DomainError, NotPositiveDefinite


def spd_solve(A, b, symmetry_tol: float = 1e-10) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive-definite ``A`` via Cholesky.

    One step of iterative refinement is applied, which is enough to bring the
    residual to the level of the rounding in ``A`` for the well-conditioned
    m x m systems used here.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DomainError(f"right-hand side has length {b.shape[0]}, expected {A.shape[0]}")
    scale = max(np.max(np.abs(A)), np.finfo(float).tiny)
    if np.max(np.abs(A - A.T)) > symmetry_tol * scale:
        raise DomainError("matrix is not symmetric")
    if not np.all(np.isfinite(A)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        factor = scipy.linalg.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {exc}") from None
    x = scipy.linalg.cho_solve(factor, b, check_finite=False)
    x = x + scipy.linalg.cho_solve(factor, b - A @ x, check_finite=False)
    return x
