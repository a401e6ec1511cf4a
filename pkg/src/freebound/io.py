"""Field dumps: CSV (``x,y,value``) and plain PGM (P2) images."""
from __future__ import annotations

import csv
import io as _io
from pathlib import Path

import numpy as np

from .grid import ScalarField


def field_rows(field: ScalarField):
    """``(x, y, value)`` rows, outer loop over the last axis; 1D fields get ``y = 0``."""
    grid = field.grid
    if grid.ndim == 1:
        for x, val in zip(grid.axes[0], field.values):
            yield x, 0.0, val
        return
    xs, ys = grid.axes
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            yield x, y, field.values[i, j]


def field_to_csv(field: ScalarField) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "value"])
    for row in field_rows(field):
        writer.writerow([format(float(c), ".17g") for c in row])
    return buf.getvalue()


def write_csv(field: ScalarField, path) -> Path:
    path = Path(path)
    path.write_text(field_to_csv(field), encoding="utf-8")
    return path


def read_csv(path, grid) -> ScalarField:
    """Inverse of :func:`write_csv` for a known grid."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    values = data[:, 2]
    if grid.ndim == 2:
        values = values.reshape(grid.dims[1], grid.dims[0]).T
    return ScalarField(grid, values)


def field_to_pgm(field: ScalarField) -> str:
    """P2 image, min-max scaled to 0..255, top row at the largest y."""
    vals = np.atleast_2d(field.values) if field.grid.ndim == 1 else field.values
    if field.grid.ndim == 1:
        vals = vals.reshape(1, -1).T
    lo, hi = float(vals.min()), float(vals.max())
    scaled = np.zeros_like(vals) if hi == lo else (vals - lo) / (hi - lo) * 255.0
    img = np.rint(scaled).astype(int).T[::-1]
    rows = [" ".join(str(p) for p in row) for row in img]
    return f"P2\n{img.shape[1]} {img.shape[0]}\n255\n" + "\n".join(rows) + "\n"


def write_pgm(field: ScalarField, path) -> Path:
    path = Path(path)
    path.write_text(field_to_pgm(field), encoding="ascii")
    return path


def write_table(path, header, rows) -> Path:
    """CSV table with floats at 17 significant digits."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(c, ".17g") if isinstance(c, float) else c for c in row])
    return path
