"""Elliptic solvers: the periodic Poisson inverse and the SPD mobility systems.

``PoissonSolver`` inverts ``-Delta_h`` on mean-zero fields, either exactly in
the discrete Fourier basis (the default) or by conjugate gradients.
``spd_solve`` handles ``mass_weight * w - shift * div_h(M grad_h w) = rhs``.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import grid as g
from .errors import (NoConvergenceError, NonPositiveCoefficientError,
                     NonZeroMeanError)

MEAN_RTOL = 1e-12


class SolveInfo(NamedTuple):
    iterations: int
    residual: float


def conjugate_gradient(matvec, b, x0=None, tol=1e-10, maxiter=1000, precond=None,
                       dot=None):
    """Preconditioned conjugate gradients for an SPD operator.

    Stops when ``||b - A x|| <= tol * ||b||``.

    Parameters
    ----------
    matvec : callable
        Applies the operator to an array shaped like ``b``.
    precond : ndarray, optional
        Inverse of a diagonal preconditioner, multiplied elementwise.
    dot : callable, optional
        Inner product; defaults to the Euclidean one.

    Returns
    -------
    x : ndarray
    info : SolveInfo
        Iteration count and final relative residual.
    """
    if dot is None:
        def dot(u, v):
            return float(np.vdot(u, v))
    bnorm = np.sqrt(dot(b, b))
    if bnorm == 0.0:
        return np.zeros_like(b), SolveInfo(0, 0.0)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    rnorm = np.sqrt(dot(r, r))
    if rnorm <= tol * bnorm:
        return x, SolveInfo(0, rnorm / bnorm)
    z = r if precond is None else precond * r
    d = z.copy()
    rz = dot(r, z)
    for it in range(1, maxiter + 1):
        Ad = matvec(d)
        alpha = rz / dot(d, Ad)
        x += alpha * d
        r -= alpha * Ad
        rnorm = np.sqrt(dot(r, r))
        if rnorm <= tol * bnorm:
            return x, SolveInfo(it, rnorm / bnorm)
        z = r if precond is None else precond * r
        rz_new = dot(r, z)
        d *= rz_new / rz
        d += z
        rz = rz_new
    raise NoConvergenceError(maxiter, rnorm / bnorm)


def neg_laplacian_symbol(grid, real=True):
    """Eigenvalues of ``-Delta_h`` on the discrete Fourier modes.

    With ``real=True`` the array matches the layout of ``numpy.fft.rfftn``.
    """
    N, h = grid.N, grid.h
    m = np.arange(N)
    lam1 = (4.0 / h**2) * np.sin(np.pi * m / N) ** 2
    axes = [lam1] * grid.dim
    if real:
        axes[-1] = lam1[: N // 2 + 1]
    out = axes[0].reshape((-1,) + (1,) * (grid.dim - 1))
    for a in range(1, grid.dim):
        shape = [1] * grid.dim
        shape[a] = -1
        out = out + axes[a].reshape(shape)
    return out


class PoissonSolver:
    """Inverse of ``-Delta_h`` on the periodic mean-zero subspace.

    Parameters
    ----------
    grid : Grid
    method : {"spectral", "cg"}
    tol : float
        Relative residual target for ``method="cg"``.
    max_iters : int
        Iteration cap for ``method="cg"``.
    """

    def __init__(self, grid, method="spectral", tol=1e-10, max_iters=10_000):
        if method not in ("spectral", "cg"):
            raise ValueError(f"unknown Poisson method {method!r}")
        self.grid = grid
        self.method = method
        self.tol = tol
        self.max_iters = max_iters
        if method == "spectral":
            sym = neg_laplacian_symbol(grid)
            inv = np.zeros_like(sym)
            nz = sym > 0
            inv[nz] = 1.0 / sym[nz]
            self._inv_symbol = inv

    def check_mean(self, f, scale=None):
        """Raise unless ``f`` is mean-zero relative to ``max(||f||_2, scale)``."""
        grid = self.grid
        fbar = float(np.mean(f))
        ref = g.norm_l2(grid, f)
        if scale is not None:
            ref = max(ref, scale)
        # l2 norm of the constant part of f
        if abs(fbar) * np.sqrt(grid.volume) > MEAN_RTOL * ref:
            raise NonZeroMeanError(fbar, ref)
        return fbar

    def solve(self, f, scale=None, return_info=False):
        """Return the mean-zero ``psi`` with ``-Delta_h psi = f``.

        Parameters
        ----------
        f : ndarray
            Right-hand side; must be mean-zero up to round-off.
        scale : float, optional
            Magnitude of the quantities ``f`` was formed from (e.g. the norms
            of two densities whose difference is ``f``). Widens the mean test
            so round-off in that difference is not mistaken for net charge.

        Raises
        ------
        NonZeroMeanError
        NoConvergenceError
            Only for ``method="cg"``.
        """
        grid = self.grid
        f = grid.check_cell(f)
        fbar = self.check_mean(f, scale)
        f = f - fbar
        if self.method == "spectral":
            psi = np.fft.irfftn(np.fft.rfftn(f) * self._inv_symbol, s=grid.shape,
                                axes=range(grid.dim))
            psi -= psi.mean()
            info = SolveInfo(0, 0.0)
        else:
            def matvec(u):
                return -g._divergence(g.gradient(grid, u), grid.h)
            psi, info = conjugate_gradient(matvec, f, tol=self.tol, maxiter=self.max_iters)
            psi -= psi.mean()
        return (psi, info) if return_info else psi

    __call__ = solve


def poisson_solve(grid, f, method="spectral", **kw):
    """Functional shortcut for ``PoissonSolver(grid, method).solve(f)``."""
    return PoissonSolver(grid, method).solve(f, **kw)


def h_inv_norm(grid, f, solver=None, scale=None):
    """Discrete negative norm ``sqrt(<f, (-Delta_h)^{-1} f>)``."""
    solver = PoissonSolver(grid) if solver is None else solver
    psi = solver.solve(f, scale=scale)
    val = g.inner_product(grid, f - np.mean(f), psi)
    return np.sqrt(max(val, 0.0))


@lru_cache(maxsize=8)
def difference_matrices(grid):
    """Sparse forward-difference matrices, one per axis, on raveled cell arrays."""
    size = grid.N ** grid.dim
    idx = np.arange(size).reshape(grid.shape)
    mats = []
    for a in range(grid.dim):
        nbr = np.roll(idx, -1, axis=a).ravel()
        rows = np.concatenate([idx.ravel(), idx.ravel()])
        cols = np.concatenate([nbr, idx.ravel()])
        vals = np.concatenate([np.full(size, 1.0 / grid.h), np.full(size, -1.0 / grid.h)])
        mats.append(sp.csr_matrix((vals, (rows, cols)), shape=(size, size)))
    return tuple(mats)


def stiffness_matrix(grid, mobility):
    """Sparse ``-div_h(mobility * grad_h .)`` acting on raveled cell arrays."""
    mobility = grid.check_face(mobility, "mobility")
    K = None
    for a, Da in enumerate(difference_matrices(grid)):
        term = Da.T @ sp.diags(mobility[a].ravel()) @ Da
        K = term if K is None else K + term
    return K.tocsr()


@dataclass(frozen=True)
class EllipticSystem:
    """``w -> mass_weight * w - shift * div_h(mobility * grad_h w)``.

    Symmetric positive definite whenever ``mobility > 0`` on every face and
    ``mass_weight > 0`` in every cell. ``stiffness`` optionally caches
    :func:`stiffness_matrix` of the mobility, which makes :meth:`apply` a
    single sparse product.
    """

    grid: g.Grid
    mobility: np.ndarray
    mass_weight: np.ndarray
    shift: float
    stiffness: object = None

    def validate(self):
        self.grid.check_face(self.mobility, "mobility")
        self.grid.check_cell(self.mass_weight, "mass_weight")
        if not np.all(self.mobility > 0):
            raise NonPositiveCoefficientError(
                f"mobility must be > 0, min is {self.mobility.min():.6e}")
        if not np.all(self.mass_weight > 0):
            raise NonPositiveCoefficientError(
                f"mass_weight must be > 0, min is {self.mass_weight.min():.6e}")
        if self.shift < 0:
            raise NonPositiveCoefficientError(f"shift must be >= 0, got {self.shift}")

    def apply(self, w):
        grid = self.grid
        if self.stiffness is not None:
            Kw = (self.stiffness @ w.ravel()).reshape(w.shape)
            return self.mass_weight * w + self.shift * Kw
        flux = self.mobility * g.gradient(grid, w)
        return self.mass_weight * w - self.shift * g._divergence(flux, grid.h)

    def diagonal(self):
        M = self.mobility
        h2 = self.grid.h ** 2
        diag = self.mass_weight.copy()
        for a in range(self.grid.dim):
            diag += self.shift * (M[a] + np.roll(M[a], 1, axis=a)) / h2
        return diag


def spd_solve(system, rhs, tol=1e-10, max_iters=10_000, x0=None, preconditioner=None):
    """Solve an :class:`EllipticSystem` by conjugate gradients.

    Parameters
    ----------
    system : EllipticSystem
    rhs : ndarray
    tol : float
        Relative residual target, ``||A w - rhs||_2 <= tol * ||rhs||_2``.
    x0 : ndarray, optional
        Initial guess.
    preconditioner : {None, "jacobi"}

    Returns
    -------
    w : ndarray
    info : SolveInfo
    """
    system.validate()
    rhs = system.grid.check_cell(rhs, "rhs")
    if not np.all(np.isfinite(rhs)):
        raise ValueError("rhs must be finite")
    if system.shift == 0:
        return rhs / system.mass_weight, SolveInfo(0, 0.0)
    if preconditioner is None:
        precond = None
    elif preconditioner == "jacobi":
        precond = 1.0 / system.diagonal()
    else:
        raise ValueError(f"unknown preconditioner {preconditioner!r}")
    return conjugate_gradient(system.apply, rhs, x0=x0, tol=tol, maxiter=max_iters,
                              precond=precond)
