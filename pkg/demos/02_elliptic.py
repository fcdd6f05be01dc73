"""
Poisson and mobility solves
===========================

The electric potential comes from the periodic Poisson problem, which is
only solvable for mean-zero data. The density updates need SPD systems of
the form ``weight * w - dt * div(M grad w) = rhs``.
"""
import numpy as np

import pnpfd as pf

grid = pf.Grid(2, 64)
x, y = grid.coords()

# %%
# Spectral inverse: exact for the discrete Laplacian.
psi_true = np.sin(np.pi * x) * np.cos(2 * np.pi * y)
f = -pf.laplacian(grid, psi_true)
psi = pf.poisson_solve(grid, f)
print("spectral inverse error:", np.abs(psi - psi_true).max())

psi_cg, info = pf.PoissonSolver(grid, "cg", tol=1e-12).solve(f, return_info=True)
print(f"cg agrees to {np.abs(psi_cg - psi).max():.1e} after {info.iterations} iterations")

# %%
# Data with net charge is rejected rather than silently projected.
try:
    pf.poisson_solve(grid, f + 1.0)
except pf.NonZeroMeanError as exc:
    print("rejected:", exc)

# %%
# A mobility system with coefficients like those of one time step.
n = 0.1 + 0.05 * np.exp(-10 * (x ** 2 + y ** 2))
mob = np.stack([0.5 * (n + np.roll(n, -1, axis=a)) for a in range(2)])
rhs = n.copy()
for pre in (None, "jacobi"):
    w, info = pf.spd_solve(pf.EllipticSystem(grid, mob, n, 1e-3), rhs, tol=1e-12,
                           preconditioner=pre)
    print(f"preconditioner={pre}: {info.iterations} iterations, residual {info.residual:.1e}")

# %%
# The discrete negative norm used in the energy.
print("||f||_{-1,h} =", pf.h_inv_norm(grid, f))
