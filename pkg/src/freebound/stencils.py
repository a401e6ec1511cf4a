"""Sparse matrix versions of the centered stencils, used for Jacobians."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import Grid


def _interior_rows(grid: Grid) -> np.ndarray:
    return np.flatnonzero(~grid.boundary_mask.ravel())


def _stencil_matrix(grid: Grid, weights: dict[tuple[int, ...], float]) -> sp.csr_matrix:
    """Matrix applying ``sum w * u[node + offset]`` at interior nodes (zero rows on the boundary)."""
    rows = _interior_rows(grid)
    idx = np.array(np.unravel_index(rows, grid.dims))
    data, r, c = [], [], []
    for offset, w in weights.items():
        nb = idx + np.array(offset)[:, None]
        cols = np.ravel_multi_index(tuple(nb), grid.dims)
        r.append(rows)
        c.append(cols)
        data.append(np.full(rows.size, w))
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(r), np.concatenate(c))), shape=(grid.size, grid.size)
    )


@lru_cache(maxsize=8)
def derivative_matrices(grid: Grid) -> dict:
    """First and second difference matrices keyed ``(k,)`` and ``(j, k)``."""
    n, h = grid.ndim, grid.h
    mats = {}
    for k in range(n):
        e = [0] * n
        e[k] = 1
        plus, minus = tuple(e), tuple(-x for x in e)
        mats[(k,)] = _stencil_matrix(grid, {plus: 1 / (2 * h), minus: -1 / (2 * h)})
        mats[(k, k)] = _stencil_matrix(grid, {plus: 1 / h**2, (0,) * n: -2 / h**2, minus: 1 / h**2})
    if n == 2:
        mats[(0, 1)] = _stencil_matrix(
            grid,
            {(1, 1): 1 / (4 * h**2), (1, -1): -1 / (4 * h**2), (-1, 1): -1 / (4 * h**2), (-1, -1): 1 / (4 * h**2)},
        )
    return mats


@lru_cache(maxsize=8)
def laplacian_matrix(grid: Grid) -> sp.csr_matrix:
    mats = derivative_matrices(grid)
    return sum(mats[(k, k)] for k in range(grid.ndim)).tocsr()


def interior_index(grid: Grid) -> np.ndarray:
    return _interior_rows(grid)
