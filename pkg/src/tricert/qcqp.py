"""Quadratic program over the epipolar variety.

Variables are ordered ``(u_1, v_1, ..., u_n, v_n, 1)``. For every pair
``i < j`` (lexicographic; this order indexes all multiplier vectors) the
bilinear epipolar form ``x_i~^T F x_j~`` is lifted to a symmetric
``(2n+1) x (2n+1)`` matrix by splitting each cross term into two halves.
"""
from dataclasses import dataclass
from itertools import combinations
from typing import Tuple

import numpy as np

from . import geometry
from .errors import DimensionMismatchError, InvalidInputError


@dataclass(frozen=True)
class LiftedConstraint:
    pair: Tuple[int, int]
    F: np.ndarray            # full symmetric lifted matrix
    fundamental: np.ndarray  # normalized 3x3 matrix it was lifted from

    @property
    def H(self):
        return self.F[:-1, :-1]

    @property
    def b(self):
        return self.F[:-1, -1]

    @property
    def beta(self):
        return float(self.F[-1, -1])


@dataclass(frozen=True)
class LiftedQcqp:
    n: int
    x_hat: np.ndarray
    G: np.ndarray
    E: np.ndarray
    constraints: Tuple[LiftedConstraint, ...]
    cameras: Tuple[np.ndarray, ...]

    @property
    def pairs(self):
        return [c.pair for c in self.constraints]

    @property
    def dim(self):
        return 2 * self.n + 1


def pair_list(n):
    return list(combinations(range(n), 2))


def lift_fundamental(F3, i, j, n) -> np.ndarray:
    F3 = np.asarray(F3, dtype=float)
    k = 2 * n + 1
    M = np.zeros((k, k))
    bi = slice(2 * i, 2 * i + 2)
    bj = slice(2 * j, 2 * j + 2)
    M[bi, bj] = F3[:2, :2] / 2
    M[bj, bi] = F3[:2, :2].T / 2
    M[bi, -1] = F3[:2, 2] / 2
    M[-1, bi] = F3[:2, 2] / 2
    M[bj, -1] += F3[2, :2] / 2
    M[-1, bj] += F3[2, :2] / 2
    M[-1, -1] = F3[2, 2]
    return M


def objective_matrix(x_hat) -> np.ndarray:
    x_hat = np.asarray(x_hat, dtype=float)
    m = x_hat.size
    G = np.zeros((m + 1, m + 1))
    G[:m, :m] = np.eye(m)
    G[:m, m] = -x_hat
    G[m, :m] = -x_hat
    G[m, m] = x_hat @ x_hat
    return G


def as_observations(obs, n) -> np.ndarray:
    x = np.asarray(obs, dtype=float).reshape(-1)
    if x.size != 2 * n:
        raise DimensionMismatchError(f"expected {2 * n} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("observations have non-finite entries")
    return x


def build_qcqp(cameras, obs) -> LiftedQcqp:
    cameras = tuple(geometry.check_camera(P) for P in cameras)
    n = len(cameras)
    if n < 2:
        raise InvalidInputError("need at least two cameras")
    x_hat = as_observations(obs, n)
    k = 2 * n + 1
    E = np.zeros((k, k))
    E[-1, -1] = 1.0
    constraints = []
    for i, j in pair_list(n):
        F3 = geometry.fundamental_matrix(cameras[i], cameras[j])
        constraints.append(LiftedConstraint((i, j), lift_fundamental(F3, i, j, n), F3))
    return LiftedQcqp(n, x_hat, objective_matrix(x_hat), E, tuple(constraints), cameras)


def _check_x(q, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != 2 * q.n:
        raise DimensionMismatchError(f"expected a vector of length {2 * q.n}, got {x.size}")
    return x


def _check_lam(q, lam):
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.size != len(q.constraints):
        raise DimensionMismatchError(
            f"expected {len(q.constraints)} multipliers, got {lam.size}")
    return lam


def _pair_index(q, pair):
    if isinstance(pair, (int, np.integer)):
        return int(pair)
    return q.pairs.index(tuple(pair))


def objective(q, x) -> float:
    d = _check_x(q, x) - q.x_hat
    return float(d @ d)


def constraint_residuals(q, x) -> np.ndarray:
    xt = np.append(_check_x(q, x), 1.0)
    return np.array([xt @ c.F @ xt for c in q.constraints])


def constraint_gradient(q, pair, x) -> np.ndarray:
    """Gradient ``2 (H x + b)`` of one epipolar constraint."""
    x = _check_x(q, x)
    c = q.constraints[_pair_index(q, pair)]
    return 2.0 * (c.H @ x + c.b)


def constraint_jacobian(q, x) -> np.ndarray:
    """Rows are the constraint gradients, in pair order."""
    x = _check_x(q, x)
    return np.array([2.0 * (c.H @ x + c.b) for c in q.constraints])


def certificate_matrix(q, lam) -> np.ndarray:
    lam = _check_lam(q, lam)
    M = np.eye(2 * q.n)
    for l, c in zip(lam, q.constraints):
        M += l * c.H
    return M


def lagrangian_matrix(q, lam, rho) -> np.ndarray:
    """``G + sum lam_ij F_ij - rho E``; the dual slack of the relaxation."""
    lam = _check_lam(q, lam)
    M = q.G.copy()
    for l, c in zip(lam, q.constraints):
        M += l * c.F
    M -= rho * q.E
    return M


def lagrangian_value(q, x, lam, rho) -> float:
    lam = _check_lam(q, lam)
    return objective(q, x) + float(lam @ constraint_residuals(q, x)) - rho
