"""
Screening of a fixed charge
===========================

Four Gaussian fixed charges of alternating sign sit in a uniform bath of
both species (n = p = 0.1). The ions rearrange to screen them; along the
way the discrete energy decreases, both masses stay at 0.4 and the
concentrations stay positive.

The default here is a short, coarse run. ``--full`` uses the configured
builtin case (N = 128, dt = 1e-3, T = 5), which takes several minutes.
"""
import sys

import numpy as np

import pnpfd as pf
from pnpfd.config import fixed_charge_field

full = "--full" in sys.argv
cfg = pf.parse_config("initial.case = screening\n" +
                      ("" if full else "grid.N = 48\ntime.dt = 2e-3\ntime.T_final = 0.4\n"))
grid = pf.Grid(cfg.grid.dim, cfg.grid.N[0], cfg.grid.L)
src = pf.Sources(rho_f=fixed_charge_field(cfg.physics.rho_f, grid))
state = pf.initial_state(grid, grid.full(0.1), grid.full(0.1), src)
params = cfg.scheme_params()


# %%
# March, printing every tenth of the run.
def show(st, rep):
    m = round(st.time / params.dt)
    if m % max(1, round(cfg.time.T_final / params.dt) // 10) == 0:
        print(f"t = {st.time:6.3f}  E = {rep.energy:.12f}  mass_p = {rep.mass_p:.15f}  "
              f"c_min = {rep.c_min:.5f}  picard = {rep.picard_iters}")


state, reports = pf.advance(state, params, cfg.time.T_final, src, callback=show)

# %%
# The per-step energy identity: E_new + dissipation <= E_old.
E = np.array([r.energy for r in reports])
D = np.array([r.dissipation for r in reports])
print("energy never rises:", bool(np.all(np.diff(E) <= 0)))
print("largest E_new + D - E_old:", float(np.max(E[1:] + D[1:] - E[:-1])))

# %%
# The screened state: ions pile up on charges of the opposite sign.
print("n at the four charge centres:")
for cx, cy in [(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)]:
    i = np.argmin(np.abs(grid.centers_1d - cx))
    j = np.argmin(np.abs(grid.centers_1d - cy))
    print(f"  ({cx:+.1f}, {cy:+.1f}): n = {state.n[i, j]:.4f}  p = {state.p[i, j]:.4f}")
