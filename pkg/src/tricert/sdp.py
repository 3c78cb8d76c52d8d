"""Primal-dual interior-point solver for small dense SDPs.

Solves the standard-form pair::

    minimize   <C, X>                maximize   b^T y
    subject to <A_k, X> = b_k        subject to C - sum_k y_k A_k = S
               X PSD                            S PSD

with an infeasible-start path-following method using the HKM search
direction and Mehrotra predictor-corrector steps. The Schur complement is
formed densely; the intended sizes are a few dozen constraints on matrices
of order at most ~50.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from . import linalg
from .errors import DegenerateProblemError, InvalidInputError
from .qcqp import LiftedQcqp, constraint_residuals

log = logging.getLogger(__name__)


class SolverStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverConfig:
    gap_tol: float = 1e-9
    feas_tol: float = 1e-9
    max_iterations: int = 100
    step_fraction: float = 0.98

    def __post_init__(self):
        if self.gap_tol <= 0 or self.feas_tol <= 0:
            raise InvalidInputError("solver tolerances must be positive")
        if not 0.0 < self.step_fraction < 1.0:
            raise InvalidInputError("step_fraction must lie in (0, 1)")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be positive")


@dataclass(frozen=True)
class SdpProblem:
    C: np.ndarray
    A: np.ndarray          # (m, k, k) stack of constraint matrices
    b: np.ndarray
    origin: object = None  # the LiftedQcqp this problem was built from, if any

    def __post_init__(self):
        C = linalg.as_symmetric(self.C)
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        k = C.shape[0]
        if A.ndim != 3 or A.shape[1:] != (k, k):
            raise InvalidInputError(f"constraint stack must have shape (m, {k}, {k})")
        if A.shape[0] < 1 or b.size != A.shape[0]:
            raise InvalidInputError("need m >= 1 constraints with matching right-hand sides")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
            raise InvalidInputError("non-finite problem data")
        if np.max(np.abs(A - A.transpose(0, 2, 1))) > 1e-12 * (1 + np.max(np.abs(A))):
            raise InvalidInputError("constraint matrices must be symmetric")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "A", 0.5 * (A + A.transpose(0, 2, 1)))
        object.__setattr__(self, "b", b)

    @property
    def size(self):
        return self.C.shape[0]

    @property
    def num_constraints(self):
        return self.A.shape[0]


@dataclass
class SdpSolution:
    Y: np.ndarray
    y: np.ndarray
    S: np.ndarray   # C - sum y_k A_k
    primal_obj: float
    dual_obj: float
    iterations: int
    status: SolverStatus
    problem: Optional[SdpProblem] = None
    history: List[dict] = field(default_factory=list, repr=False)

    @property
    def converged(self):
        return self.status is SolverStatus.CONVERGED

    def summary(self) -> dict:
        return {"status": self.status.value, "iterations": self.iterations,
                "primal_obj": self.primal_obj, "dual_obj": self.dual_obj}


def _check_independent(A):
    m = A.shape[0]
    V = A.reshape(m, -1)
    norms = np.linalg.norm(V, axis=1)
    if np.any(norms == 0):
        raise DegenerateProblemError("zero constraint matrix")
    V = V / norms[:, None]
    w = np.linalg.eigvalsh(V @ V.T)
    if w[0] <= 1e-10:
        raise DegenerateProblemError("constraint matrices are linearly dependent")


def _max_step(X, dX):
    """Largest ``a`` with ``X + a dX`` PSD, for ``X`` positive definite."""
    L = np.linalg.cholesky(X)
    Linv = np.linalg.inv(L)
    w = np.linalg.eigvalsh(Linv @ dX @ Linv.T)[0]
    return np.inf if w >= 0 else -1.0 / w


def _schur_solver(M):
    # Near a degenerate optimum M loses rank numerically. Use Cholesky when it
    # succeeds, otherwise a truncated eigen-solve; one step of iterative
    # refinement recovers most of the accuracy lost to conditioning.
    try:
        L = np.linalg.cholesky(M)
        Linv = np.linalg.inv(L)
        base = lambda r: Linv.T @ (Linv @ r)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(M)
        if not np.isfinite(w[-1]) or w[-1] <= 0:
            raise
        w_inv = np.where(w > 1e-14 * w[-1], 1.0 / np.where(w > 0, w, 1.0), 0.0)
        base = lambda r: V @ (w_inv * (V.T @ r))

    def solve(r):
        x = base(r)
        return x + base(r - M @ x)
    return solve


def _is_pd(X):
    try:
        np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return False
    return True


def _step(X, dX, fraction):
    a = min(1.0, fraction * _max_step(X, dX))
    for _ in range(40):
        if _is_pd(X + a * dX):
            return a
        a *= 0.8
    return 0.0


def solve_sdp(prob: SdpProblem, cfg: Optional[SolverConfig] = None) -> SdpSolution:
    cfg = cfg or SolverConfig()
    C, A, b = prob.C, prob.A, prob.b
    m, k = A.shape[0], C.shape[0]
    _check_independent(A)
    Avec = A.reshape(m, k * k)
    normC = linalg.frob(C)
    normb = float(np.linalg.norm(b))

    tau = 1.0 + normC + float(np.max(np.abs(b)))
    X = tau * np.eye(k)
    S = tau * np.eye(k)
    y = np.zeros(m)

    history = []
    best = None
    status = SolverStatus.MAX_ITERATIONS
    it = 0
    while True:
        Rp = b - Avec @ X.ravel()
        Rd = C - S - (y @ Avec).reshape(k, k)
        pobj = float(np.vdot(C, X))
        dobj = float(b @ y)
        gap = float(np.vdot(X, S))
        scale = 1.0 + abs(pobj)
        pinf = float(np.linalg.norm(Rp)) / (1.0 + normb)
        dinf = linalg.frob(Rd) / (1.0 + normC)
        relgap = abs(pobj - dobj) / scale
        history.append({"iteration": it, "primal_obj": pobj, "dual_obj": dobj,
                        "gap": gap, "pinf": pinf, "dinf": dinf})
        merit = max(relgap / cfg.gap_tol, gap / scale / cfg.gap_tol,
                    pinf / cfg.feas_tol, dinf / cfg.feas_tol)
        if best is None or merit <= best[0]:
            best = (merit, X.copy(), y.copy(), it)
        if merit <= 1.0:
            status = SolverStatus.CONVERGED
            break
        if it >= cfg.max_iterations:
            break
        it += 1

        try:
            Sinv = np.linalg.inv(np.linalg.cholesky(S))
            Sinv = Sinv.T @ Sinv
            XAS = np.matmul(np.matmul(X, A), Sinv)
            M = Avec @ XAS.reshape(m, k * k).T
            M = 0.5 * (M + M.T)
            XRdS = X @ Rd @ Sinv
            base = Avec @ XRdS.ravel() + Rp

            solve_M = _schur_solver(M)

            def direction(R):
                dy = solve_M(base - Avec @ R.ravel())
                dS = Rd - (dy @ Avec).reshape(k, k)
                dX = R - X @ dS @ Sinv
                return 0.5 * (dX + dX.T), dy, dS

            mu = gap / k
            dX, dy, dS = direction(-X)
            ap = min(1.0, _max_step(X, dX))
            ad = min(1.0, _max_step(S, dS))
            pred_gap = float(np.vdot(X + ap * dX, S + ad * dS))
            sigma = min(1.0, max(0.0, pred_gap / gap)) ** 3
            R = sigma * mu * Sinv - X - dX @ dS @ Sinv
            dX, dy, dS = direction(R)
            ap = _step(X, dX, cfg.step_fraction)
            ad = _step(S, dS, cfg.step_fraction)
        except np.linalg.LinAlgError as exc:
            log.debug("linear algebra failure at iteration %d: %s", it, exc)
            status = SolverStatus.NUMERICAL_FAILURE
            break
        if not (np.all(np.isfinite(dX)) and np.all(np.isfinite(dy))) or max(ap, ad) < 1e-12:
            status = SolverStatus.NUMERICAL_FAILURE
            break
        X = X + ap * dX
        X = 0.5 * (X + X.T)
        y = y + ad * dy
        S = S + ad * dS
        S = 0.5 * (S + S.T)

    if status is not SolverStatus.CONVERGED:
        log.debug("SDP stopped with status %s after %d iterations", status.value, it)
        _, X, y, _ = best
    S_out = C - (y @ Avec).reshape(k, k)
    return SdpSolution(Y=X, y=y, S=0.5 * (S_out + S_out.T),
                       primal_obj=float(np.vdot(C, X)), dual_obj=float(b @ y),
                       iterations=it, status=status, problem=prob, history=history)


def triangulation_problem(q: LiftedQcqp) -> SdpProblem:
    """Moment relaxation of the triangulation QCQP in standard form.

    Constraint order is the pair order of ``q`` followed by ``<E, Y> = 1``.
    """
    A = np.array([c.F for c in q.constraints] + [q.E])
    b = np.zeros(len(q.constraints) + 1)
    b[-1] = 1.0
    return SdpProblem(C=q.G, A=A, b=b, origin=q)


def triangulation_duals(sol: SdpSolution):
    """Map solver multipliers to ``(lam, rho)`` with ``G + sum lam F - rho E == S``."""
    prob = sol.problem
    if prob is None or not isinstance(prob.origin, LiftedQcqp):
        raise InvalidInputError("solution does not come from a triangulation relaxation")
    return -sol.y[:-1].copy(), float(sol.y[-1])


def slater_points(q: LiftedQcqp, x):
    """Strictly feasible primal and dual points of the relaxation.

    ``x`` must satisfy the epipolar constraints. Returns ``(Y, (lam, rho))``
    where ``Y = x~ x~^T + diag(1, ..., 1, 0)`` and ``(lam, rho) = (0, -1)``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    res = constraint_residuals(q, x)
    if np.max(np.abs(res)) > 1e-9:
        raise InvalidInputError("point does not satisfy the epipolar constraints")
    xt = np.append(x, 1.0)
    D = np.eye(q.dim)
    D[-1, -1] = 0.0
    Y = np.outer(xt, xt) + D
    return Y, (np.zeros(len(q.constraints)), -1.0)
