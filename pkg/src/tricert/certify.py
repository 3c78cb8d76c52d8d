"""Certified triangulation.

Solves the moment relaxation, reads the candidate projections off the last
column of the primal matrix, and certifies global optimality when the
multiplier-weighted Hessian ``I + sum lam_ij H_ij`` is safely positive
definite. Coplanar camera rigs with more than two views additionally need
the candidate to be reprojection-consistent, because the epipolar variety
then contains points that no single world point explains.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import geometry, qcqp
from .errors import DegenerateGeometryError, InvalidInputError, PointAtInfinityError
from .sdp import (SdpProblem, SdpSolution, SolverConfig, solve_sdp,
                  triangulation_duals, triangulation_problem)

log = logging.getLogger(__name__)


class Status(str, Enum):
    OPTIMAL = "OPTIMAL"
    SUBOPTIMAL = "SUBOPTIMAL"


@dataclass(frozen=True)
class CertifyConfig:
    delta: float = 0.05
    reproj_tol: float = 1e-6
    coplanar_tol: float = 1e-6
    refine: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.delta <= 0 or self.reproj_tol <= 0 or self.coplanar_tol <= 0:
            raise InvalidInputError("delta and tolerances must be positive")


@dataclass
class TriangulationResult:
    status: Status
    X: np.ndarray
    x: np.ndarray
    objective: float
    dual_bound: float
    certificate_min_eig: float
    rank_gap: float
    coplanar: bool
    solver: dict
    multipliers: np.ndarray = field(repr=False, default=None)
    solution: Optional[SdpSolution] = field(repr=False, default=None)
    refined: bool = False

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "X": [float(v) for v in self.X],
            "x": [float(v) for v in self.x],
            "objective": self.objective,
            "dual_bound": self.dual_bound,
            "certificate_min_eig": self.certificate_min_eig,
            "rank_gap": self.rank_gap,
            "coplanar": self.coplanar,
            "refined": self.refined,
            "solver": dict(self.solver),
        }


def check_certificate(q, lam, delta):
    """``(passes, min_eig)`` for the definiteness test ``I + sum lam H > delta``."""
    M = qcqp.certificate_matrix(q, lam)
    min_eig = float(np.linalg.eigvalsh(M)[0])
    return min_eig > delta, min_eig


def gradient_slice_check(q, x_star, lam) -> float:
    """Norm of ``x_hat - x* - sum (lam_ij / 2) grad f_ij(x*)``.

    Zero exactly when ``lam`` are Lagrange multipliers for ``x*``.
    """
    lam = np.asarray(lam, dtype=float)
    J = qcqp.constraint_jacobian(q, x_star)
    r = q.x_hat - np.asarray(x_star, dtype=float) - 0.5 * (lam @ J)
    return float(np.linalg.norm(r))


def maximize_certificate(q, x, lam0, solver_cfg=None):
    """Best certificate among multipliers that are stationary at ``x``.

    Every ``lam`` with ``grad g(x) + sum lam_ij grad f_ij(x) = 0`` and
    ``I + sum lam_ij H_ij >= 0`` is dual optimal together with ``rho = g(x)``.
    When the constraint gradients are linearly dependent (``n >= 3``) these
    multipliers form an affine family, and the solver may land anywhere in
    its relative interior. This picks the member maximizing the smallest
    eigenvalue of the certificate matrix by solving a small auxiliary SDP.

    Returns ``(lam, min_eig)``.
    """
    x = np.asarray(x, dtype=float)
    J = qcqp.constraint_jacobian(q, x)
    target = 2.0 * (q.x_hat - x)
    lam0 = np.asarray(lam0, dtype=float)
    lam_p = lam0 + np.linalg.lstsq(J.T, target - J.T @ lam0, rcond=None)[0]
    _, s, Vt = np.linalg.svd(J.T, full_matrices=True)
    rank = int(np.sum(s > 1e-8 * s[0])) if s.size else 0
    N = Vt[rank:].T
    if N.shape[1] == 0:
        return lam_p, check_certificate(q, lam_p, 0.0)[1]

    Hs = np.array([c.H for c in q.constraints])
    dirs = np.einsum("pd,pij->dij", N, Hs)
    # drop multiplier directions that do not move the certificate matrix
    U, sv, _ = np.linalg.svd(dirs.reshape(len(dirs), -1), full_matrices=False)
    keep = sv > 1e-10 * max(sv[0], 1e-300)
    if not np.any(keep):
        return lam_p, check_certificate(q, lam_p, 0.0)[1]
    N = N @ U[:, keep]
    dirs = np.einsum("pd,pij->dij", N, Hs)

    k = 2 * q.n
    A = np.concatenate([-dirs, np.eye(k)[None]])
    b = np.zeros(len(A))
    b[-1] = 1.0
    sol = solve_sdp(SdpProblem(qcqp.certificate_matrix(q, lam_p), A, b), solver_cfg)
    lam = lam_p + N @ sol.y[:-1]
    return lam, check_certificate(q, lam, 0.0)[1]


def _residuals(cameras, x_hat, X):
    Xh = np.append(X, 1.0)
    r = np.empty(2 * len(cameras))
    J = np.empty((2 * len(cameras), 3))
    for i, P in enumerate(cameras):
        u, v, w = P @ Xh
        if abs(w) <= 1e-12 * np.linalg.norm(P) * np.linalg.norm(Xh):
            raise PointAtInfinityError("zero depth during refinement")
        pu, pv = u / w, v / w
        r[2 * i] = pu - x_hat[2 * i]
        r[2 * i + 1] = pv - x_hat[2 * i + 1]
        J[2 * i] = (P[0, :3] - pu * P[2, :3]) / w
        J[2 * i + 1] = (P[1, :3] - pv * P[2, :3]) / w
    return r, J


def reprojection_objective(cameras, obs, X) -> float:
    """Sum of squared reprojection errors; ``inf`` if a depth vanishes."""
    x_hat = np.asarray(obs, dtype=float).reshape(-1)
    try:
        r, _ = _residuals([np.asarray(P, float) for P in cameras], x_hat, np.asarray(X, float))
    except PointAtInfinityError:
        return np.inf
    return float(r @ r)


def refine(cameras, obs, X0, max_iterations=100, gtol=1e-10):
    """Levenberg-Marquardt refinement of the reprojection error from ``X0``.

    Returns ``(X, objective)``. The objective never increases; if no depth
    is valid at ``X0`` the starting point is returned with ``inf`` objective.
    """
    cameras = [np.asarray(P, dtype=float) for P in cameras]
    x_hat = np.asarray(obs, dtype=float).reshape(-1)
    X = np.asarray(X0, dtype=float).copy()
    try:
        r, J = _residuals(cameras, x_hat, X)
    except PointAtInfinityError:
        log.debug("refinement failed: degenerate depth at start")
        return X, np.inf
    cost = float(r @ r)
    H = J.T @ J
    damping = 1e-3 * max(np.max(np.diag(H)), 1e-12)
    nu = 2.0
    for _ in range(max_iterations):
        g = J.T @ r
        if np.linalg.norm(g) <= gtol:
            break
        D = np.diag(np.maximum(np.diag(H), 1e-12 * np.max(np.diag(H))))
        try:
            step = np.linalg.solve(H + damping * D, -g)
        except np.linalg.LinAlgError:
            damping *= nu
            nu *= 2.0
            continue
        X_new = X + step
        try:
            r_new, J_new = _residuals(cameras, x_hat, X_new)
            cost_new = float(r_new @ r_new)
        except PointAtInfinityError:
            cost_new = np.inf
        predicted = float(step @ (damping * D @ step - g))
        gain = (cost - cost_new) / predicted if predicted > 0 else -1.0
        if cost_new < cost and gain > 0:
            X, r, J, cost = X_new, r_new, J_new, cost_new
            H = J.T @ J
            damping *= max(1.0 / 3.0, 1.0 - (2.0 * gain - 1.0) ** 3)
            nu = 2.0
            if np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(X)):
                break
        else:
            damping *= nu
            nu *= 2.0
            if damping > 1e30:
                break
    return X, cost


def _dual_certified(q, x, lam, rho):
    # Guard against numerical artifacts: the multipliers must be dual feasible
    # and the bound must match the candidate's objective.
    g = qcqp.objective(q, x)
    if g - rho > 1e-6 * (1.0 + abs(g)):
        log.warning("certificate passed but duality gap is open (%.3g)", g - rho)
        return False
    slack = float(np.linalg.eigvalsh(qcqp.lagrangian_matrix(q, lam, rho))[0])
    if slack < -1e-8:
        log.warning("certificate passed but multipliers are dual infeasible (%.3g)", slack)
        return False
    return True


def _polish(q, cameras, X, lam, rho, delta):
    # The interior-point iterate is stationary only to about sqrt(<S, Y>).
    # Refine X to machine precision, move lam onto the stationarity set at the
    # refined point and re-run the certificate there. Returns None if the
    # polished point does not certify.
    X_ref, _ = refine(cameras, q.x_hat, X)
    try:
        x = geometry.project_all(cameras, X_ref)
    except PointAtInfinityError:
        return None
    J = qcqp.constraint_jacobian(q, x)
    lam = lam + np.linalg.lstsq(J.T, 2.0 * (q.x_hat - x) - J.T @ lam, rcond=None)[0]
    passes, min_eig = check_certificate(q, lam, delta)
    if not passes or not _dual_certified(q, x, lam, rho):
        log.debug("polished point failed to certify; keeping the relaxation solution")
        return None
    return X_ref, x, lam, min_eig


def triangulate(cameras, obs, cfg: Optional[CertifyConfig] = None) -> TriangulationResult:
    cfg = cfg or CertifyConfig()
    cameras = [geometry.check_camera(P) for P in cameras]
    q = qcqp.build_qcqp(cameras, obs)
    n = q.n
    coplanar = geometry.are_coplanar(cameras, cfg.coplanar_tol)

    sol = solve_sdp(triangulation_problem(q), cfg.solver)
    lam, rho = triangulation_duals(sol)
    Y = sol.Y
    x = Y[:-1, -1].copy()
    w = np.linalg.eigvalsh(Y)
    rank_gap = float(abs(w[-2]) / w[-1]) if w[-1] > 0 else np.inf
    passes, min_eig = check_certificate(q, lam, cfg.delta)
    if sol.converged and not passes:
        lam_best, eig_best = maximize_certificate(q, x, lam, cfg.solver)
        if eig_best > min_eig:
            lam, min_eig = lam_best, eig_best
            passes = min_eig > cfg.delta

    try:
        X = geometry.dlt_triangulate(cameras, x)
    except (PointAtInfinityError, DegenerateGeometryError):
        X = None

    optimal = False
    if sol.converged and passes and X is not None:
        if n == 2 or (n >= 4 and not coplanar):
            optimal = True
        else:
            optimal = geometry.reprojection_exact(cameras, X, x, cfg.reproj_tol)
        if optimal:
            optimal = _dual_certified(q, x, lam, rho)

    refined = False
    if optimal:
        x_out = x
        if cfg.refine:
            polished = _polish(q, cameras, X, lam, rho, cfg.delta)
            if polished is not None:
                X, x_out, lam, min_eig = polished
                refined = True
    else:
        if X is None:
            X = geometry.dlt_triangulate(cameras, q.x_hat)
        if cfg.refine:
            X_ref, cost = refine(cameras, q.x_hat, X)
            if cost < reprojection_objective(cameras, q.x_hat, X):
                X, refined = X_ref, True
        try:
            x_out = geometry.project_all(cameras, X)
        except PointAtInfinityError:
            x_out = x

    return TriangulationResult(
        status=Status.OPTIMAL if optimal else Status.SUBOPTIMAL,
        X=np.asarray(X, dtype=float), x=x_out, objective=qcqp.objective(q, x_out),
        dual_bound=rho, certificate_min_eig=min_eig, rank_gap=rank_gap,
        coplanar=coplanar, solver=sol.summary(), multipliers=lam, solution=sol,
        refined=refined)
