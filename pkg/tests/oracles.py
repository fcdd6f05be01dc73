"""Independent reference implementations used by the tests.

Everything here is built from dense matrices assembled with Kronecker
products, so it shares no code path with the roll-based operators, the
spectral Poisson solver, the sparse stiffness matrix or the CG solver.
"""
import numpy as np


def forward_difference_1d(N, h):
    """Periodic ``(v[i+1] - v[i]) / h`` as a dense matrix."""
    D = -np.eye(N)
    for i in range(N):
        D[i, (i + 1) % N] += 1.0
    return D / h


def difference_matrices(dim, N, h):
    """Forward differences along each axis for C-ordered raveled fields."""
    D1 = forward_difference_1d(N, h)
    I = np.eye(N)
    mats = []
    for a in range(dim):
        M = np.ones((1, 1))
        for b in range(dim):
            M = np.kron(M, D1 if a == b else I)
        mats.append(M)
    return mats


def neg_laplacian(dim, N, h):
    """``-Delta_h`` from the 1D second-difference stencil, summed over axes."""
    T = np.zeros((N, N))
    for i in range(N):
        T[i, i] = 2.0
        T[i, (i - 1) % N] -= 1.0
        T[i, (i + 1) % N] -= 1.0
    T /= h * h
    I = np.eye(N)
    A = np.zeros((N ** dim, N ** dim))
    for a in range(dim):
        M = np.ones((1, 1))
        for b in range(dim):
            M = np.kron(M, T if a == b else I)
        A += M
    return A


def green(dim, N, h):
    """Pseudo-inverse of ``-Delta_h``: maps any field to the mean-zero solution."""
    return np.linalg.pinv(neg_laplacian(dim, N, h), rcond=1e-12, hermitian=True)


def stiffness(dim, N, h, mobility):
    """``sum_a D_a^T diag(M_a) D_a`` for a face field ``mobility``."""
    K = np.zeros((N ** dim, N ** dim))
    for a, D in enumerate(difference_matrices(dim, N, h)):
        K += D.T @ np.diag(mobility[a].ravel()) @ D
    return K


def spd_dense_solve(dim, N, h, mobility, mass_weight, shift, rhs):
    A = np.diag(mass_weight.ravel()) + shift * stiffness(dim, N, h, mobility)
    return np.linalg.solve(A, rhs.ravel()).reshape(rhs.shape)


def face_average(dim, N, c):
    return np.stack([0.5 * (c + np.roll(c, -1, axis=a)) for a in range(dim)])


def energy(dim, N, h, n, p, rho=None):
    """Entropy plus half the ``H^{-1}`` norm squared of the total charge."""
    c = (p - n if rho is None else p - n + rho).ravel()
    G = green(dim, N, h)
    vol = h ** dim
    return vol * np.sum(n * np.log(n) + p * np.log(p)) + 0.5 * vol * c @ G @ c


def newton_step(dim, N, h, n_old, p_old, dt, D=1.0, rho=None, f_n=None, f_p=None,
                tol=1e-14, maxiter=100):
    """Solve the implicit step by damped Newton on the full coupled system.

    Unknowns are the new densities; the potential is eliminated through the
    dense Green's matrix. Residuals::

        F_n = n - n_old + dt K_n (ln n - G q) - dt f_n
        F_p = p - p_old + dt K_p (ln p + G q) - dt f_p
        q   = p - n + rho

    with ``K = sum D^T diag(M) D`` and mobilities averaged from the old step.
    """
    m = N ** dim
    G = green(dim, N, h)
    Kn = stiffness(dim, N, h, face_average(dim, N, n_old))
    Kp = stiffness(dim, N, h, D * face_average(dim, N, p_old))
    r = np.zeros(m) if rho is None else rho.ravel()
    fn = np.zeros(m) if f_n is None else f_n.ravel()
    fp = np.zeros(m) if f_p is None else f_p.ravel()
    n0, p0 = n_old.ravel(), p_old.ravel()

    def residual(n, p):
        phi = G @ (p - n + r)
        return np.concatenate([n - n0 + dt * Kn @ (np.log(n) - phi) - dt * fn,
                               p - p0 + dt * Kp @ (np.log(p) + phi) - dt * fp])

    n, p = n0.copy(), p0.copy()
    F = residual(n, p)
    I = np.eye(m)
    for _ in range(maxiter):
        if np.linalg.norm(F, np.inf) < tol:
            break
        J = np.block([[I + dt * Kn @ (np.diag(1.0 / n) + G), -dt * Kn @ G],
                      [-dt * Kp @ G, I + dt * Kp @ (np.diag(1.0 / p) + G)]])
        delta = np.linalg.solve(J, -F)
        lam = 1.0
        while True:
            n1, p1 = n + lam * delta[:m], p + lam * delta[m:]
            if np.all(n1 > 0) and np.all(p1 > 0):
                F1 = residual(n1, p1)
                if np.linalg.norm(F1) <= (1 - 1e-4 * lam) * np.linalg.norm(F) or lam < 1e-8:
                    break
            lam *= 0.5
        n, p, F = n1, p1, F1
    else:
        raise RuntimeError("Newton oracle did not converge")
    shape = n_old.shape
    phi = (G @ (p - n + r)).reshape(shape)
    return n.reshape(shape), p.reshape(shape), phi


# 8th-order central difference weights for first and second derivatives
FD1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
FD2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
FD_OFFSETS = np.arange(-4, 5)


def derivative(f, point, axis, order, step=1e-2):
    """High-order central difference of ``f(*point)`` along one argument."""
    w = FD1 if order == 1 else FD2
    total = 0.0
    for wi, o in zip(w, FD_OFFSETS):
        q = list(point)
        q[axis] += o * step
        total += wi * f(*q)
    return total / step ** order
