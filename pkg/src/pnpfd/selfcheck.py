"""Quick operator and identity checks behind ``pnp check``."""
import os
import tempfile

import numpy as np

from . import grid as g
from . import mms
from .elliptic import EllipticSystem, PoissonSolver, spd_solve
from .io import read_field, write_field


def _rel(a, b, scale):
    return abs(a - b) / max(scale, 1e-300)


def check_summation_by_parts(rng):
    worst = 0.0
    for dim in (2, 3):
        for N in (4, 8):
            grid = g.Grid(dim, N, 1.0)
            psi, nu = rng.standard_normal(grid.shape), rng.standard_normal(grid.shape)
            f = rng.standard_normal(grid.face_shape)
            coeff = rng.uniform(0.5, 2.0, grid.face_shape)
            lhs = g.inner_product(grid, psi, g.divergence(grid, f))
            rhs = -g.face_inner_product(grid, g.gradient(grid, psi), f)
            scale = grid.cell_volume * np.sum(np.abs(psi * g.divergence(grid, f)))
            worst = max(worst, _rel(lhs, rhs, scale))
            flux = coeff * g.gradient(grid, nu)
            lhs = g.inner_product(grid, psi, g.divergence(grid, flux))
            rhs = -g.face_inner_product(grid, g.gradient(grid, psi), flux)
            scale = grid.cell_volume * np.sum(np.abs(psi * g.divergence(grid, flux)))
            worst = max(worst, _rel(lhs, rhs, scale))
    return worst < 1e-12, f"max relative defect {worst:.2e}"


def check_laplacian_impulse(rng):
    grid = g.Grid(3, 4, 1.0)
    e = grid.zeros()
    e[1, 2, 3] = 1.0
    lap = g.laplacian(grid, e)
    expect = grid.zeros()
    expect[1, 2, 3] = -6.0 / grid.h**2
    for a in range(3):
        for s in (-1, 1):
            idx = [1, 2, 3]
            idx[a] = (idx[a] + s) % grid.N
            expect[tuple(idx)] = 1.0 / grid.h**2
    err = float(np.max(np.abs(lap - expect)))
    return err <= 1e-12 / grid.h**2, f"max stencil error {err:.2e}"


def check_composition(rng):
    grid = g.Grid(2, 8, 1.0)
    v = rng.standard_normal(grid.shape)
    same = np.array_equal(g.laplacian(grid, v), g.divergence(grid, g.gradient(grid, v)))
    ones = np.ones(grid.face_shape)
    same &= np.array_equal(g.variable_coeff_div(grid, ones, v), g.laplacian(grid, v))
    return bool(same), "laplacian == div(grad) and div(1 grad) bitwise"


def check_poisson(rng):
    grid = g.Grid(2, 16, 1.0)
    f = rng.standard_normal(grid.shape)
    f -= f.mean()
    psi = PoissonSolver(grid).solve(f)
    psi_cg = PoissonSolver(grid, "cg", tol=1e-13).solve(f)
    res = g.norm_l2(grid, -g.laplacian(grid, psi) - f) / g.norm_l2(grid, f)
    diff = g.norm_l2(grid, psi - psi_cg) / g.norm_l2(grid, psi)
    return res < 1e-12 and diff < 1e-10 and abs(psi.mean()) < 1e-14, \
        f"residual {res:.2e}, spectral vs cg {diff:.2e}"


def check_spd(rng):
    grid = g.Grid(2, 16, 1.0)
    system = EllipticSystem(grid, rng.uniform(0.5, 2.0, grid.face_shape),
                            rng.uniform(0.5, 2.0, grid.shape), 0.01)
    rhs = rng.standard_normal(grid.shape)
    w, info = spd_solve(system, rhs, tol=1e-12)
    res = g.norm_l2(grid, system.apply(w) - rhs) / g.norm_l2(grid, rhs)
    return res <= 1e-12, f"residual {res:.2e} after {info.iterations} iterations"


def check_mms_sources(rng):
    # 8th-order central differences of the exact fields
    c1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
    c2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
    off = np.arange(-4, 5)
    d = 1e-2
    worst = 0.0
    for _ in range(10):
        t, x, y = rng.uniform(0, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)

        def dx(f, k):
            c = c1 if k == 1 else c2
            return sum(ci * f(t, x + o * d, y) for ci, o in zip(c, off)) / d**k

        def dy(f, k):
            c = c1 if k == 1 else c2
            return sum(ci * f(t, x, y + o * d) for ci, o in zip(c, off)) / d**k

        def dt(f):
            return sum(ci * f(t + o * d, x, y) for ci, o in zip(c1, off)) / d

        n, p, phi = mms.exact_n(t, x, y), mms.exact_p(t, x, y), mms.exact_phi(t, x, y)
        lap_phi = dx(mms.exact_phi, 2) + dy(mms.exact_phi, 2)
        grad_phi = (dx(mms.exact_phi, 1), dy(mms.exact_phi, 1))
        drift_n = (dx(mms.exact_n, 1) * grad_phi[0] + dy(mms.exact_n, 1) * grad_phi[1]
                   + n * lap_phi)
        drift_p = (dx(mms.exact_p, 1) * grad_phi[0] + dy(mms.exact_p, 1) * grad_phi[1]
                   + p * lap_phi)
        r_n = dt(mms.exact_n) - (dx(mms.exact_n, 2) + dy(mms.exact_n, 2) - drift_n) \
            - mms.source_n(t, x, y)
        r_p = dt(mms.exact_p) - (dx(mms.exact_p, 2) + dy(mms.exact_p, 2) + drift_p) \
            - mms.source_p(t, x, y)
        r_phi = -lap_phi - (p - n) - mms.fixed_charge(t, x, y)
        worst = max(worst, abs(r_n), abs(r_p), abs(r_phi))
    return worst < 1e-8, f"max residual {worst:.2e}"


def check_snapshot_roundtrip(rng):
    grid = g.Grid(2, 5, 1.3)
    v = rng.standard_normal(grid.shape) * 10.0 ** rng.integers(-300, 300, grid.shape)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "v.txt")
        write_field(path, grid, v, "v", 0.1)
        grid2, v2, name, t = read_field(path)
    ok = grid2 == grid and np.array_equal(v, v2) and name == "v" and t == 0.1
    return bool(ok), "17-digit write/read is exact"


CHECKS = [
    ("summation-by-parts", check_summation_by_parts),
    ("laplacian impulse stencil", check_laplacian_impulse),
    ("laplacian composition", check_composition),
    ("poisson inverse", check_poisson),
    ("spd solve", check_spd),
    ("manufactured sources", check_mms_sources),
    ("snapshot round trip", check_snapshot_roundtrip),
]


def run_checks(seed=0):
    """Run every check; returns a list of ``(name, passed, detail)``."""
    rng = np.random.default_rng(seed)
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
