"""Dense linear-algebra kernels for small symmetric problems.

Thin, validated wrappers around LAPACK (via numpy). Every routine rejects
non-finite input and measures tolerances against the Frobenius norm.
"""
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import InvalidInputError, SingularSystemError

ABS_FLOOR = 1e-14


class EigDecomposition(NamedTuple):
    values: np.ndarray   # ascending
    vectors: np.ndarray  # columns are orthonormal eigenvectors


def _as_finite(A, name="A"):
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def frob(A) -> float:
    return float(np.linalg.norm(A))


def as_symmetric(A, rtol=1e-10) -> np.ndarray:
    """Validate that ``A`` is square and symmetric; return an exactly symmetric copy."""
    A = _as_finite(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {A.shape}")
    asym = frob(A - A.T)
    if asym > rtol * frob(A) + ABS_FLOOR:
        raise InvalidInputError(f"matrix is not symmetric (|A - A^T| = {asym:.3g})")
    return 0.5 * (A + A.T)


def sym_eig(A) -> EigDecomposition:
    A = as_symmetric(A)
    w, V = np.linalg.eigh(A)
    return EigDecomposition(w, V)


def min_eigenvalue(A) -> float:
    A = as_symmetric(A)
    return float(np.linalg.eigvalsh(A)[0])


def svd(A) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD returning ``(U, s, V)`` with ``A = U @ diag(s) @ V.T``."""
    A = _as_finite(A)
    if A.ndim != 2:
        raise InvalidInputError(f"expected a matrix, got shape {A.shape}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    return U, s, Vt.T


def null_vector(A) -> np.ndarray:
    """Unit vector minimizing ``|A v|`` (last right singular vector)."""
    A = _as_finite(A)
    _, _, Vt = np.linalg.svd(A, full_matrices=True)
    return Vt[-1]


def cholesky(A, rtol=1e-14) -> Optional[np.ndarray]:
    """Lower Cholesky factor of ``A``, or ``None`` if ``A`` is not positive definite.

    A pivot whose square falls below ``rtol * |A|_F`` counts as a failure, so
    matrices that are only semidefinite up to roundoff are reported as such.
    """
    A = as_symmetric(A)
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        return None
    if np.min(np.diag(L)) ** 2 <= rtol * frob(A):
        return None
    return L


def solve_linear(A, b) -> np.ndarray:
    A = _as_finite(A)
    b = _as_finite(b, "b")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise InvalidInputError("right-hand side length does not match matrix")
    s = np.linalg.svd(A, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    if cond > 1e15:
        raise SingularSystemError("matrix is singular to working precision", cond)
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise SingularSystemError("matrix is singular", cond) from None
