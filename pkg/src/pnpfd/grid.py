"""Periodic uniform staggered grid and its finite difference operators.

Cell-centered fields are plain ``float64`` arrays of shape ``(N,) * dim``.
Face-centered fields are arrays of shape ``(dim,) + (N,) * dim``: component
``a`` holds the values on faces normal to axis ``a``, with the face
``i + 1/2`` stored at index ``i``. Every index is taken modulo ``N``.

The domain is ``(-L, L)**dim`` and cell ``i`` has center
``-L + (i + 1/2) h`` with ``h = 2L / N``.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, NonPositiveCoefficientError

__all__ = [
    "Grid",
    "gradient",
    "divergence",
    "laplacian",
    "variable_coeff_div",
    "average_to_faces",
    "inner_product",
    "face_inner_product",
    "norm_l2",
    "norm_lp",
    "norm_inf",
    "grad_norm",
    "norm_h1",
    "norms",
    "mean",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``(-L, L)**dim`` with ``N`` cells per axis."""

    dim: int
    N: int
    L: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self):
        return 2.0 * self.L / self.N

    @property
    def shape(self):
        return (self.N,) * self.dim

    @property
    def face_shape(self):
        return (self.dim,) + self.shape

    @property
    def volume(self):
        """Measure of the domain, ``(2L)**dim``."""
        return (2.0 * self.L) ** self.dim

    @property
    def cell_volume(self):
        return self.h ** self.dim

    @cached_property
    def centers_1d(self):
        return -self.L + (np.arange(self.N) + 0.5) * self.h

    def coords(self):
        """Cell-center coordinate arrays, one per axis (``indexing='ij'``)."""
        return np.meshgrid(*([self.centers_1d] * self.dim), indexing="ij")

    def zeros(self):
        return np.zeros(self.shape)

    def full(self, value):
        return np.full(self.shape, float(value))

    def check_cell(self, v, name="field"):
        v = np.asarray(v, dtype=float)
        if v.shape != self.shape:
            raise GridMismatchError(f"{name} has shape {v.shape}, grid expects {self.shape}")
        return v

    def check_face(self, f, name="face field"):
        f = np.asarray(f, dtype=float)
        if f.shape != self.face_shape:
            raise GridMismatchError(f"{name} has shape {f.shape}, grid expects {self.face_shape}")
        return f


def gradient(grid, v):
    """Forward differences onto faces: ``(v[i+1] - v[i]) / h`` per axis."""
    v = grid.check_cell(v)
    h = grid.h
    return np.stack([(np.roll(v, -1, axis=a) - v) / h for a in range(grid.dim)])


def divergence(grid, f):
    """Backward differences of face components back to cells."""
    f = grid.check_face(f)
    return _divergence(f, grid.h)


def _divergence(f, h):
    out = (f[0] - np.roll(f[0], 1, axis=0)) / h
    for a in range(1, f.shape[0]):
        out += (f[a] - np.roll(f[a], 1, axis=a)) / h
    return out


def laplacian(grid, v):
    """Standard 5-point (2D) or 7-point (3D) periodic Laplacian.

    Computed as ``divergence(gradient(v))`` so that the composition identity
    holds exactly in floating point.
    """
    return divergence(grid, gradient(grid, v))


def variable_coeff_div(grid, coeff, v):
    """``div_h(coeff * grad_h v)`` for a strictly positive face coefficient.

    Raises
    ------
    NonPositiveCoefficientError
        If any face value of ``coeff`` is not strictly positive.
    """
    coeff = grid.check_face(coeff, "coefficient")
    if not np.all(coeff > 0):
        raise NonPositiveCoefficientError(
            f"face coefficient must be > 0, min is {coeff.min():.6e}")
    return divergence(grid, coeff * gradient(grid, v))


def average_to_faces(grid, v):
    """Arithmetic mean of the two cells adjacent to each face."""
    v = grid.check_cell(v)
    return np.stack([0.5 * (np.roll(v, -1, axis=a) + v) for a in range(grid.dim)])


def inner_product(grid, u, v):
    """Cell inner product ``h**dim * sum(u * v)``."""
    u = grid.check_cell(u)
    v = grid.check_cell(v)
    return grid.cell_volume * float(np.sum(u * v))


def face_inner_product(grid, f, g):
    """Face inner product summed over the components.

    Each component contributes ``<a(f g), 1>``; averaging to cells and then
    summing over a full period counts every face exactly once, so this is
    ``h**dim * sum(f * g)``.
    """
    f = grid.check_face(f)
    g = grid.check_face(g)
    return grid.cell_volume * float(np.sum(f * g))


def mean(grid, v):
    v = grid.check_cell(v)
    return float(np.mean(v))


def norm_l2(grid, v):
    return np.sqrt(max(inner_product(grid, v, v), 0.0))


def norm_lp(grid, v, p):
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if np.isinf(p):
        return norm_inf(grid, v)
    v = grid.check_cell(v)
    return (grid.cell_volume * float(np.sum(np.abs(v) ** p))) ** (1.0 / p)


def norm_inf(grid, v):
    v = grid.check_cell(v)
    return float(np.max(np.abs(v)))


def grad_norm(grid, v, p=2):
    """Discrete ``||grad_h v||_p`` using the face inner product."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    g = gradient(grid, v)
    if np.isinf(p):
        return float(np.max(np.abs(g)))
    return (grid.cell_volume * float(np.sum(np.abs(g) ** p))) ** (1.0 / p)


def norm_h1(grid, v):
    return np.sqrt(norm_l2(grid, v) ** 2 + grad_norm(grid, v) ** 2)


def norms(grid, v, p=None):
    """All cell norms of ``v`` in one dict.

    Keys are ``l2``, ``linf`` and ``h1``, plus ``lp`` when ``p`` is given.
    """
    out = {
        "l2": norm_l2(grid, v),
        "linf": norm_inf(grid, v),
        "h1": norm_h1(grid, v),
    }
    if p is not None:
        out["lp"] = norm_lp(grid, v, p)
    return out
