"""Plain-text field snapshots, time-series CSV and run manifests."""
import csv
import os
import re

import numpy as np

from .grid import Grid

FIELD_MAGIC = "pnp-field v1"
SERIES_COLUMNS = ("time", "energy", "mass_n", "mass_p", "c_min",
                  "dissipation", "picard_iters", "residual")

_HEADER_RE = re.compile(
    r"^pnp-field v1 dim=(?P<dim>\d+) N=(?P<N>\d+) L=(?P<L>\S+) "
    r"name=(?P<name>\S+) time=(?P<time>\S+)\s*$")


def fmt(x):
    """17 significant digits: enough for an exact float64 round trip."""
    return format(float(x), ".17g")


def write_field(path, grid, values, name, time):
    """Write one cell field as ``pnp-field v1`` text.

    The header is followed by the values in row-major order, one grid row per
    line.
    """
    values = grid.check_cell(values)
    if not name or any(c.isspace() for c in name):
        raise ValueError(f"field name must be a non-empty token, got {name!r}")
    rows = values.reshape(-1, grid.N)
    with open(path, "w") as fh:
        fh.write(f"{FIELD_MAGIC} dim={grid.dim} N={grid.N} L={fmt(grid.L)} "
                 f"name={name} time={fmt(time)}\n")
        for row in rows:
            fh.write(" ".join(fmt(v) for v in row))
            fh.write("\n")


def read_field(path):
    """Read a ``pnp-field v1`` file.

    Returns
    -------
    grid : Grid
    values : ndarray
    name : str
    time : float
    """
    with open(path) as fh:
        header = fh.readline()
        m = _HEADER_RE.match(header)
        if m is None:
            raise ValueError(f"{path}: not a pnp-field v1 file")
        grid = Grid(int(m["dim"]), int(m["N"]), float(m["L"]))
        data = np.array(fh.read().split(), dtype=float)
    if data.size != grid.N ** grid.dim:
        raise ValueError(f"{path}: expected {grid.N ** grid.dim} values, found {data.size}")
    return grid, data.reshape(grid.shape), m["name"], float(m["time"])


class SeriesWriter:
    """Row-at-a-time diagnostics CSV; every row is flushed as it is written."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(SERIES_COLUMNS)
        self._fh.flush()

    def write(self, report):
        row = []
        for col in SERIES_COLUMNS:
            v = getattr(report, col)
            row.append(str(int(v)) if col == "picard_iters" else fmt(v))
        self._writer.writerow(row)
        self._fh.flush()

    def close(self):
        if not self._fh.closed:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_series(path):
    """Load a diagnostics CSV into a dict of float arrays keyed by column."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {col: np.array([float(r[col]) for r in rows]) for col in SERIES_COLUMNS}


def write_manifest(path, entries):
    """``entries`` is a list of ``(filename, time or None)`` pairs."""
    with open(path, "w") as fh:
        for fname, t in entries:
            fh.write(f"{fname}\t{'-' if t is None else fmt(t)}\n")
