"""
Discrete operators on a periodic grid
=====================================

Cell-centered fields live on an ``N**dim`` array, face fields carry an
extra leading axis for the direction. The gradient lands on faces, the
divergence brings a face field back to cells, and the Laplacian is exactly
their composition.
"""
import numpy as np

import pnpfd as pf

grid = pf.Grid(dim=2, N=32, L=1.0)
x, y = grid.coords()
print(grid, "h =", grid.h)

# %%
# A smooth field and its discrete derivatives. The gradient is a centered
# difference about the face, so it is second-order accurate there.
u = np.sin(np.pi * x) * np.cos(np.pi * y)
du = pf.gradient(grid, u)
exact_x = np.pi * np.cos(np.pi * (x + grid.h / 2)) * np.cos(np.pi * y)
print("face gradient error:", np.abs(du[0] - exact_x).max())

# %%
# The Laplacian is div(grad), bit for bit.
print("laplacian == div(grad):",
      np.array_equal(pf.laplacian(grid, u), pf.divergence(grid, du)))

# %%
# Summation by parts: <psi, div f> = -[grad psi, f] for any psi and f.
rng = np.random.default_rng(0)
psi = rng.standard_normal(grid.shape)
f = rng.standard_normal(grid.face_shape)
lhs = pf.inner_product(grid, psi, pf.divergence(grid, f))
rhs = -pf.face_inner_product(grid, pf.gradient(grid, psi), f)
print(f"summation by parts: {lhs:.15e} vs {rhs:.15e}")

# %%
# With a positive face coefficient the same identity holds for
# div(M grad nu), which is what makes the mobility systems symmetric.
M = rng.uniform(0.5, 2.0, grid.face_shape)
nu = rng.standard_normal(grid.shape)
lhs = pf.inner_product(grid, psi, pf.variable_coeff_div(grid, M, nu))
rhs = -pf.face_inner_product(grid, pf.gradient(grid, psi), M * pf.gradient(grid, nu))
print(f"variable coefficient: {lhs:.15e} vs {rhs:.15e}")

# %%
# The five-point stencil, read off from an impulse.
e = grid.zeros()
e[5, 5] = 1.0
print((pf.laplacian(grid, e) * grid.h ** 2)[4:7, 4:7])

print(pf.norms(grid, u))
