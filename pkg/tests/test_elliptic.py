import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnpfd import grid as g
from pnpfd.elliptic import (EllipticSystem, PoissonSolver, conjugate_gradient, h_inv_norm,
                            neg_laplacian_symbol, poisson_solve, spd_solve, stiffness_matrix)
from pnpfd.errors import GridMismatchError, NonPositiveCoefficientError, NonZeroMeanError

import oracles


def mean_zero(rng, shape):
    f = rng.standard_normal(shape)
    return f - f.mean()


@pytest.mark.parametrize("dim,N", [(2, 4), (2, 7), (3, 4), (3, 5)])
def test_poisson_matches_pseudo_inverse(dim, N):
    rng = np.random.default_rng(dim * N)
    grid = g.Grid(dim, N, 0.8)
    f = mean_zero(rng, grid.shape)
    expect = oracles.green(dim, N, grid.h) @ f.ravel()
    for method in ("spectral", "cg"):
        psi = PoissonSolver(grid, method, tol=1e-14).solve(f)
        np.testing.assert_allclose(psi.ravel(), expect, atol=1e-10 * np.abs(expect).max())


def test_poisson_sine_mode():
    grid = g.Grid(2, 32, 1.0)
    X, Y = grid.coords()
    u = np.sin(np.pi * X) * np.cos(2 * np.pi * Y)
    f = -g.laplacian(grid, u)
    np.testing.assert_allclose(poisson_solve(grid, f), u, atol=1e-12)


def test_poisson_mean_checks():
    grid = g.Grid(2, 8)
    f = np.ones(grid.shape)
    with pytest.raises(NonZeroMeanError):
        PoissonSolver(grid).solve(f)
    # round-off sized means pass and are projected away
    rng = np.random.default_rng(0)
    f = mean_zero(rng, grid.shape) + 1e-15
    psi = PoissonSolver(grid).solve(f)
    assert abs(psi.mean()) < 1e-15
    # scale widens the test for differences of large quantities
    f = mean_zero(rng, grid.shape) * 1e-6 + 1e-16
    PoissonSolver(grid).solve(f, scale=1.0)
    with pytest.raises(NonZeroMeanError):
        PoissonSolver(grid).solve(f)


def test_poisson_bad_method_and_shape():
    grid = g.Grid(2, 4)
    with pytest.raises(ValueError):
        PoissonSolver(grid, "multigrid")
    with pytest.raises(GridMismatchError):
        PoissonSolver(grid).solve(np.zeros((3, 3)))


def test_symbol():
    grid = g.Grid(2, 6, 1.0)
    sym = neg_laplacian_symbol(grid, real=False)
    e = np.zeros(grid.shape)
    e[0, 0] = 1.0
    # the symbol is the Fourier transform of the stencil
    np.testing.assert_allclose(sym, np.fft.fftn(-g.laplacian(grid, e)).real, atol=1e-10)


def test_h_inv_norm():
    rng = np.random.default_rng(4)
    grid = g.Grid(2, 6, 1.0)
    f = mean_zero(rng, grid.shape)
    G = oracles.green(2, 6, grid.h)
    expect = np.sqrt(grid.cell_volume * f.ravel() @ G @ f.ravel())
    assert h_inv_norm(grid, f) == pytest.approx(expect, rel=1e-12)


def test_conjugate_gradient_dense():
    rng = np.random.default_rng(9)
    B = rng.standard_normal((30, 30))
    A = B @ B.T + 30 * np.eye(30)
    b = rng.standard_normal(30)
    x, info = conjugate_gradient(lambda v: A @ v, b, tol=1e-13, maxiter=200)
    assert np.linalg.norm(A @ x - b) <= 1e-13 * np.linalg.norm(b)
    assert info.iterations <= 30 + 5
    x2, _ = conjugate_gradient(lambda v: A @ v, b, tol=1e-13, precond=1 / np.diag(A))
    np.testing.assert_allclose(x, x2, atol=1e-10)


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("pre", [None, "jacobi"])
def test_spd_solve_matches_dense(dim, pre):
    rng = np.random.default_rng(dim)
    N = 4
    grid = g.Grid(dim, N, 1.0)
    mob = rng.uniform(0.1, 3.0, grid.face_shape)
    weight = rng.uniform(0.05, 2.0, grid.shape)
    rhs = rng.standard_normal(grid.shape)
    for shift in (1e-3, 0.1, 10.0):
        expect = oracles.spd_dense_solve(dim, N, grid.h, mob, weight, shift, rhs)
        for stiff in (None, stiffness_matrix(grid, mob)):
            w, info = spd_solve(EllipticSystem(grid, mob, weight, shift, stiff), rhs,
                                tol=1e-13, preconditioner=pre)
            np.testing.assert_allclose(w, expect, atol=1e-9 * np.abs(expect).max())


def test_spd_apply_and_diagonal():
    rng = np.random.default_rng(2)
    grid = g.Grid(2, 5, 1.0)
    mob = rng.uniform(0.1, 3.0, grid.face_shape)
    weight = rng.uniform(0.5, 2.0, grid.shape)
    A = np.diag(weight.ravel()) + 0.3 * oracles.stiffness(2, 5, grid.h, mob)
    w = rng.standard_normal(grid.shape)
    for stiff in (None, stiffness_matrix(grid, mob)):
        sys = EllipticSystem(grid, mob, weight, 0.3, stiff)
        np.testing.assert_allclose(sys.apply(w).ravel(), A @ w.ravel(), atol=1e-11)
        np.testing.assert_allclose(sys.diagonal().ravel(), np.diag(A), rtol=1e-13)


def test_spd_zero_shift_is_diagonal():
    grid = g.Grid(2, 4)
    weight = np.full(grid.shape, 2.0)
    w, info = spd_solve(EllipticSystem(grid, np.ones(grid.face_shape), weight, 0.0),
                        np.ones(grid.shape))
    assert np.all(w == 0.5) and info.iterations == 0


def test_spd_rejects_bad_coefficients():
    grid = g.Grid(2, 4)
    mob = np.ones(grid.face_shape)
    weight = np.ones(grid.shape)
    rhs = np.ones(grid.shape)
    bad_mob = mob.copy()
    bad_mob[0, 0, 0] = -1.0
    bad_w = weight.copy()
    bad_w[1, 1] = 0.0
    for sys in (EllipticSystem(grid, bad_mob, weight, 1.0),
                EllipticSystem(grid, mob, bad_w, 1.0),
                EllipticSystem(grid, mob, weight, -1.0)):
        with pytest.raises(NonPositiveCoefficientError):
            spd_solve(sys, rhs)
    with pytest.raises(ValueError):
        spd_solve(EllipticSystem(grid, mob, weight, 1.0), rhs * np.nan)
    with pytest.raises(ValueError):
        spd_solve(EllipticSystem(grid, mob, weight, 1.0), rhs, preconditioner="ilu")


@settings(max_examples=40, deadline=None)
@given(N=st.sampled_from([3, 4, 6]), shift=st.floats(1e-4, 1e2),
       seed=st.integers(0, 2 ** 32 - 1))
def test_spd_properties(N, shift, seed):
    rng = np.random.default_rng(seed)
    grid = g.Grid(2, N, 1.0)
    mob = rng.uniform(0.01, 5.0, grid.face_shape)
    weight = rng.uniform(0.01, 5.0, grid.shape)
    sys = EllipticSystem(grid, mob, weight, shift)
    u, v = rng.standard_normal(grid.shape), rng.standard_normal(grid.shape)
    # symmetric and positive definite
    a, b = np.vdot(u, sys.apply(v)), np.vdot(v, sys.apply(u))
    assert abs(a - b) <= 1e-10 * (abs(a) + np.sum(np.abs(u * sys.apply(v))))
    assert np.vdot(u, sys.apply(u)) > 0
    rhs = sys.apply(u)
    w, _ = spd_solve(sys, rhs, tol=1e-12, preconditioner="jacobi")
    assert np.linalg.norm(sys.apply(w) - rhs) <= 1e-12 * np.linalg.norm(rhs) * 1.0001
    # the solve conserves the weighted sum: sum(weight w) == sum(rhs)
    assert abs(np.sum(weight * w) - np.sum(rhs)) <= 1e-9 * np.sum(np.abs(rhs))
