"""Projective cameras, epipolar geometry and linear (DLT) triangulation.

Cameras are plain ``(3, 4)`` float arrays of arbitrary scale. Image points are
inhomogeneous 2-vectors; world points are Euclidean 3-vectors.
"""
import numpy as np

from . import linalg
from .errors import (DegenerateGeometryError, DegeneratePairError,
                     InvalidInputError, PointAtInfinityError,
                     UnsupportedCameraError)

COPLANAR_TOL = 1e-6


def check_camera(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape != (3, 4):
        raise InvalidInputError(f"camera must be 3x4, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InvalidInputError("camera has non-finite entries")
    s = np.linalg.svd(P, compute_uv=False)
    if s[0] == 0 or s[2] <= 1e-10 * s[0]:
        raise InvalidInputError("camera matrix is rank deficient")
    return P


def homogenize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.append(v, 1.0)


def cross_matrix(v) -> np.ndarray:
    """Skew-symmetric ``[v]_x`` with ``[v]_x @ w == cross(v, w)``."""
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def project(P, X) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    Xh = homogenize(X)
    u, v, w = P @ Xh
    if abs(w) <= 1e-12 * np.linalg.norm(P) * np.linalg.norm(Xh):
        raise PointAtInfinityError("point projects to infinity (zero depth)")
    return np.array([u / w, v / w])


def project_all(cameras, X) -> np.ndarray:
    """Stacked projections ``[x_1; ...; x_n]`` as a flat ``2n`` vector."""
    return np.concatenate([project(P, X) for P in cameras])


def camera_center(P) -> np.ndarray:
    P = check_camera(P)
    c = linalg.null_vector(P)
    if abs(c[3]) <= 1e-10 * np.linalg.norm(c):
        raise UnsupportedCameraError("camera center is at infinity")
    return c[:3] / c[3]


def are_coplanar(cameras, tol=COPLANAR_TOL) -> bool:
    """True when all camera centers lie on a common plane.

    Three or fewer centers always do.
    """
    if len(cameras) < 2:
        raise InvalidInputError("need at least two cameras")
    if len(cameras) <= 3:
        return True
    C = np.array([camera_center(P) for P in cameras])
    C = C - C.mean(axis=0)
    s = np.linalg.svd(C, compute_uv=False)
    return bool(s[2] <= tol * (1.0 + s[0]))


def normalize_fundamental(F) -> np.ndarray:
    # Scale to unit spectral norm; fix the sign so the first (row-major) entry of
    # maximal magnitude is positive, with a relative tie margin.
    F = np.asarray(F, dtype=float)
    F = F / np.linalg.norm(F, 2)
    flat = F.ravel()
    big = np.abs(flat)
    k = int(np.argmax(big >= big.max() * (1.0 - 1e-9)))
    return -F if flat[k] < 0 else F


def fundamental_matrix(Pi, Pj) -> np.ndarray:
    """Normalized ``F`` with ``x_i~^T F x_j~ = 0`` for corresponding points.

    Built as ``[e_i]_x Pi pinv(Pj)`` where ``e_i`` is the image of camera j's
    center in image i, then scaled to unit largest singular value.
    """
    Pi = check_camera(Pi)
    Pj = check_camera(Pj)
    ci = camera_center(Pi)
    cj = camera_center(Pj)
    if np.linalg.norm(ci - cj) <= 1e-10 * (1.0 + max(np.linalg.norm(ci), np.linalg.norm(cj))):
        raise DegeneratePairError("cameras have coincident centers")
    e_i = Pi @ homogenize(cj)
    F = cross_matrix(e_i) @ Pi @ np.linalg.pinv(Pj)
    return normalize_fundamental(F)


def epipole(Pi, Pj) -> np.ndarray:
    """Homogeneous image of camera ``Pi``'s center in camera ``Pj``."""
    return np.asarray(Pj, dtype=float) @ homogenize(camera_center(Pi))


def _as_points(x, n):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != 2 * n:
        raise InvalidInputError(f"expected {2 * n} image coordinates, got {x.size}")
    return x.reshape(n, 2)


def dlt_triangulate(cameras, x) -> np.ndarray:
    """Linear triangulation: the unit ``X~`` minimizing ``|A X~|``, dehomogenized."""
    n = len(cameras)
    if n < 2:
        raise InvalidInputError("need at least two views")
    pts = _as_points(x, n)
    rows = []
    for P, (u, v) in zip(cameras, pts):
        P = np.asarray(P, dtype=float)
        rows.append(u * P[2] - P[0])
        rows.append(v * P[2] - P[1])
    A = np.array(rows)
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("non-finite input to triangulation")
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    if s[2] <= 1e-12 * s[0]:
        raise DegenerateGeometryError("triangulation system is rank deficient")
    Xh = Vt[-1]
    if abs(Xh[3]) < 1e-10 * np.linalg.norm(Xh):
        raise PointAtInfinityError("triangulated point is at infinity")
    return Xh[:3] / Xh[3]


def reprojection_exact(cameras, X, x, tol) -> bool:
    """True iff every camera reprojects ``X`` within ``tol`` of its image point."""
    pts = _as_points(x, len(cameras))
    try:
        errs = [np.linalg.norm(project(P, X) - p) for P, p in zip(cameras, pts)]
    except PointAtInfinityError:
        return False
    return bool(max(errs) <= tol)
