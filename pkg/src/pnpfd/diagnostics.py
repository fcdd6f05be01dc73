"""Discrete energy, dissipation and the per-step report."""
from dataclasses import dataclass, fields

import numpy as np

from . import grid as g
from .elliptic import PoissonSolver, h_inv_norm
from .errors import NonPositiveConcentrationError


@dataclass(frozen=True)
class StepReport:
    time: float
    energy: float
    mass_n: float
    mass_p: float
    c_min: float
    dissipation: float
    picard_iters: int
    residual: float
    linear_iters: int = 0
    omega_r: float = float("nan")

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _require_positive(c, name):
    if not np.all(c > 0):
        idx = np.unravel_index(np.argmin(c), c.shape)
        raise NonPositiveConcentrationError(
            f"{name}{list(map(int, idx))} = {c[idx]:.6e} is not positive")


def entropy(grid, c):
    """``<c ln c, 1>``."""
    _require_positive(c, "c")
    return grid.cell_volume * float(np.sum(c * np.log(c)))


def discrete_energy(grid, n, p, rho_f=None, solver=None):
    """``<n ln n + p ln p, 1> + 1/2 ||p - n + rho_f||_{-1,h}^2``.

    Without a fixed charge this is exactly the scheme's discrete energy. With
    one, the electrostatic term uses the total charge ``p - n + rho_f``, whose
    variation reproduces the chemical potentials ``ln n - phi`` and
    ``ln p + phi`` used by the stepper.

    Raises
    ------
    NonPositiveConcentrationError
    NonZeroMeanError
        If the total charge is not neutral.
    """
    n = grid.check_cell(n, "n")
    p = grid.check_cell(p, "p")
    _require_positive(n, "n")
    _require_positive(p, "p")
    charge = p - n
    scale = g.norm_l2(grid, n) + g.norm_l2(grid, p)
    if rho_f is not None:
        charge = charge + rho_f
        scale += g.norm_l2(grid, rho_f)
    solver = PoissonSolver(grid) if solver is None else solver
    ent = grid.cell_volume * float(np.sum(n * np.log(n) + p * np.log(p)))
    return ent + 0.5 * h_inv_norm(grid, charge, solver, scale=scale) ** 2


def dissipation(grid, mob_n, mob_p, mu_n, mu_p, dt):
    """``dt * ([M_n grad mu_n, grad mu_n] + [M_p grad mu_p, grad mu_p])``."""
    gn = g.gradient(grid, mu_n)
    gp = g.gradient(grid, mu_p)
    return dt * (g.face_inner_product(grid, mob_n * gn, gn)
                 + g.face_inner_product(grid, mob_p * gp, gp))


def dissipation_rate(state_old, state_new, params, sources=None):
    """Dissipation of the step ``state_old -> state_new``.

    Mobilities come from ``state_old``; the chemical potentials from
    ``state_new``. The result is nonnegative and, for a converged step,
    ``E(new) + dissipation <= E(old)``.
    """
    from .scheme import chemical_potentials, face_mobility

    grid = state_old.grid
    rho = None if sources is None else sources.rho(state_new.time)
    mob_n = face_mobility(grid, state_old.n, 1.0)
    mob_p = face_mobility(grid, state_old.p, params.D)
    mu_n, mu_p, _ = chemical_potentials(grid, state_new.n, state_new.p, rho_f=rho)
    return dissipation(grid, mob_n, mob_p, mu_n, mu_p, params.dt)


def observables(grid, n, p):
    """Total masses and the minimum concentration over both species.

    Returns
    -------
    dict
        ``mass_n``, ``mass_p`` (mean times domain volume) and ``c_min``.
    """
    return {
        "mass_n": float(np.mean(n)) * grid.volume,
        "mass_p": float(np.mean(p)) * grid.volume,
        "c_min": float(min(np.min(n), np.min(p))),
    }
