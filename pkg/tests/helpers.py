import numpy as np

from tricert import harness


def counterexample_cameras(a=1.0, b=2.0):
    A1 = np.array([[0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, a]], dtype=float)
    A2 = np.array([[0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, b]], dtype=float)
    return [A1, A2]


def counterexample_obs(eps):
    return np.array([0.0, eps, eps, 0.0])


def counterexample_family(eps, mu):
    r = np.sqrt(mu * (eps - mu))
    return np.array([r, mu, eps - mu, r])


def scene(rng, n, geometry="sphere", sigma=0.0):
    return harness.generate_instance(geometry, n, sigma, rng)


def random_symmetric(rng, k):
    B = rng.normal(size=(k, k))
    return 0.5 * (B + B.T)


def planted_sdp(rng, k, m, rank=None):
    """Random strictly feasible SDP with a known optimal value.

    A complementary pair ``X* = Q diag(d, 0) Q^T``, ``S* = Q diag(0, s) Q^T``
    is planted together with a dual point ``y*``; then ``b = A(X*)`` and
    ``C = S* + A^T y*``, so ``(X*, y*, S*)`` is primal-dual optimal with value
    ``<C, X*> = b^T y*``. The constraints are made orthogonal to ``X* - X0``
    for a positive definite ``X0`` of equal trace, so ``X0`` is a strictly
    feasible primal point. The first constraint is the trace, which keeps the
    dual strictly feasible. ``m`` is capped at ``k(k+1)/2 - 1``.
    """
    m = min(m, k * (k + 1) // 2 - 1)
    if rank is None:
        rank = int(rng.integers(1, k))
    Q, _ = np.linalg.qr(rng.normal(size=(k, k)))
    d = np.concatenate([rng.uniform(0.5, 2.0, size=rank), np.zeros(k - rank)])
    s = np.concatenate([np.zeros(rank), rng.uniform(0.5, 2.0, size=k - rank)])
    Xs = Q @ np.diag(d) @ Q.T
    Ss = Q @ np.diag(s) @ Q.T
    B = rng.normal(size=(k, k))
    X0 = B @ B.T + np.eye(k)
    X0 *= np.trace(Xs) / np.trace(X0)
    D = Xs - X0
    while True:
        A = [np.eye(k)]
        for _ in range(m - 1):
            R = random_symmetric(rng, k)
            A.append(R - np.vdot(R, D) / np.vdot(D, D) * D)
        A = np.array(A)
        V = A.reshape(m, -1)
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        if np.linalg.eigvalsh(V @ V.T)[0] > 1e-6:
            break
    y = rng.normal(size=m)
    b = np.einsum("kij,ij->k", A, Xs)
    C = Ss + np.einsum("k,kij->ij", y, A)
    return C, A, b, float(b @ y)


def central_gradient(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def second_differences(f, x, h=1e-3):
    k = x.size
    Hm = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h
            ej[j] = h
            Hm[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h * h)
    return Hm
