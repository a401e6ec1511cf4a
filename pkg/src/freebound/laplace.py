"""Discrete Laplacian, a Poisson solver and projected SOR for the zero-obstacle problem."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np
import scipy.sparse.linalg as spla

from .errors import BadParameter, NegativeBoundary, NonConvergence
from .grid import Grid, ScalarField, check_same_grid, laplacian_interior
from .infinity import SolveInfo, boundary_values, transfinite_interpolant
from .stencils import interior_index, laplacian_matrix


@dataclass(frozen=True)
class PoissonParams:
    """Controls for :func:`solve_poisson`.

    ``method='sor'`` is red-black SOR with the optimal relaxation for the
    model problem unless ``relaxation`` is given; ``method='direct'`` uses a
    cached sparse LU factorization of the interior Laplacian.
    """

    method: str = "sor"
    relaxation: float | None = None
    max_iterations: int = 20000
    residual_tol: float = 1e-8

    def __post_init__(self):
        if self.method not in ("sor", "direct"):
            raise BadParameter(f"unknown method {self.method!r}")
        if self.relaxation is not None and not 0 < self.relaxation < 2:
            raise BadParameter("relaxation must lie in (0, 2)")
        if self.residual_tol <= 0:
            raise BadParameter("residual_tol must be positive")


@dataclass(frozen=True)
class PsorParams:
    relaxation: float = 1.9
    max_iterations: int = 200000
    residual_tol: float = 1e-6

    def __post_init__(self):
        if not 0 < self.relaxation < 2:
            raise BadParameter("relaxation must lie in (0, 2)")
        if self.residual_tol <= 0:
            raise BadParameter("residual_tol must be positive")


def laplacian_residual(field: ScalarField, source: ScalarField) -> ScalarField:
    """``Δ_h w - s`` at interior nodes, zero on the boundary."""
    grid = check_same_grid(field, source)
    res = np.zeros(grid.dims)
    res[grid.interior] = laplacian_interior(field.values, grid.h) - source.values[grid.interior]
    return ScalarField(grid, res, "residual")


def _optimal_relaxation(grid: Grid) -> float:
    # spectral radius of Jacobi for the model problem on a box
    rho = np.mean([np.cos(np.pi / (n - 1)) for n in grid.dims])
    return 2.0 / (1.0 + np.sqrt(1.0 - rho**2))


@lru_cache(maxsize=4)
def _interior_lu(grid: Grid):
    idx = interior_index(grid)
    A = laplacian_matrix(grid)[idx][:, idx].tocsc()
    return spla.splu(A), idx


def _colour_masks(grid: Grid):
    parity = sum(np.indices(grid.dims)) % 2
    inner = ~grid.boundary_mask
    return [inner & (parity == c) for c in (0, 1)]


def _sor(u, s, grid, omega, tol, max_iter, history):
    h2 = grid.h**2
    n = grid.ndim
    masks = _colour_masks(grid)
    res = float(np.abs(laplacian_interior(u, grid.h) - s[grid.interior]).max())
    it = 0
    while res > tol and it < max_iter:
        for mask in masks:
            nb = np.zeros(grid.dims)
            for k in range(n):
                nb += np.roll(u, 1, axis=k) + np.roll(u, -1, axis=k)
            gs = (nb - h2 * s) / (2 * n)
            u[mask] += omega * (gs[mask] - u[mask])
        it += 1
        if it % 10 == 0 or it == max_iter:
            res = float(np.abs(laplacian_interior(u, grid.h) - s[grid.interior]).max())
            history.append(res)
    return u, res, it


def solve_poisson(
    grid: Grid,
    source: ScalarField,
    boundary,
    params: PoissonParams | None = None,
    warm_start: ScalarField | None = None,
) -> ScalarField:
    """Solve ``Δ_h v = source`` with Dirichlet data; ``info`` holds a SolveInfo."""
    params = params or PoissonParams()
    check_same_grid(source, ScalarField(grid, np.zeros(grid.dims)))
    bvals = boundary_values(grid, boundary)
    history = []
    if params.method == "direct":
        lu, idx = _interior_lu(grid)
        # move the known boundary values to the right-hand side
        lap_b = np.zeros(grid.dims)
        lap_b[grid.interior] = laplacian_interior(bvals, grid.h)
        rhs = (source.values - lap_b).ravel()[idx]
        u = bvals.copy()
        u.ravel()[idx] = lu.solve(rhs)
        res = float(np.abs(laplacian_interior(u, grid.h) - source.values[grid.interior]).max())
        it = 1
    else:
        if warm_start is not None:
            u = np.array(warm_start.values, dtype=float)
            u[grid.boundary_mask] = bvals[grid.boundary_mask]
        else:
            u = transfinite_interpolant(grid, bvals)
        omega = params.relaxation or _optimal_relaxation(grid)
        u, res, it = _sor(u, source.values, grid, omega, params.residual_tol, params.max_iterations, history)
    ok = res <= params.residual_tol
    if not ok:
        warnings.warn(
            NonConvergence(f"Poisson solve stopped after {it} sweeps with residual {res:.3e}", it, res),
            stacklevel=2,
        )
    out = ScalarField(grid, u, "solution")
    out.info = SolveInfo(bool(ok), it, res, history)
    return out


# -- projected SOR ------------------------------------------------------------

@numba.njit(cache=True)
def _psor_sweeps_1d(v, g, h2, omega, sweeps):
    n = v.shape[0]
    for _ in range(sweeps):
        for i in range(1, n - 1):
            gs = 0.5 * (v[i - 1] + v[i + 1] - h2 * g[i])
            v[i] = max(v[i] + omega * (gs - v[i]), 0.0)


@numba.njit(cache=True)
def _psor_sweeps_2d(v, g, h2, omega, sweeps):
    n0, n1 = v.shape
    for _ in range(sweeps):
        for i in range(1, n0 - 1):
            for j in range(1, n1 - 1):
                gs = 0.25 * (v[i - 1, j] + v[i + 1, j] + v[i, j - 1] + v[i, j + 1] - h2 * g[i, j])
                v[i, j] = max(v[i, j] + omega * (gs - v[i, j]), 0.0)


def complementarity_residual(v: np.ndarray, g: np.ndarray, grid: Grid) -> float:
    """Sup over interior nodes of ``|min(v, g - Δ_h v)|``."""
    slack = g[grid.interior] - laplacian_interior(v, grid.h)
    return float(np.abs(np.minimum(v[grid.interior], slack)).max())


def solve_obstacle_psor(
    grid: Grid,
    source: ScalarField,
    boundary,
    params: PsorParams | None = None,
    warm_start: ScalarField | None = None,
) -> ScalarField:
    """Zero-obstacle problem ``v >= 0, Δ_h v <= g, v (g - Δ_h v) = 0``.

    Lexicographic Gauss-Seidel with over-relaxation, each update projected
    onto ``v >= 0``.
    """
    params = params or PsorParams()
    check_same_grid(source, ScalarField(grid, np.zeros(grid.dims)))
    bvals = boundary_values(grid, boundary)
    if bvals[grid.boundary_mask].min() < 0:
        raise NegativeBoundary(f"boundary trace has minimum {bvals[grid.boundary_mask].min():.3e} < 0")
    if warm_start is not None:
        v = np.maximum(np.array(warm_start.values, dtype=float), 0.0)
    else:
        v = np.maximum(transfinite_interpolant(grid, bvals), 0.0)
    v[grid.boundary_mask] = bvals[grid.boundary_mask]
    g = np.ascontiguousarray(source.values, dtype=float)
    kernel = _psor_sweeps_1d if grid.ndim == 1 else _psor_sweeps_2d
    h2 = grid.h**2
    history = []
    res = complementarity_residual(v, g, grid)
    it, chunk = 0, 20
    while res > params.residual_tol and it < params.max_iterations:
        kernel(v, g, h2, params.relaxation, chunk)
        it += chunk
        res = complementarity_residual(v, g, grid)
        history.append(res)
    ok = res <= params.residual_tol
    if not ok:
        warnings.warn(
            NonConvergence(f"PSOR stopped after {it} sweeps with residual {res:.3e}", it, res),
            stacklevel=2,
        )
    out = ScalarField(grid, v, "solution")
    out.info = SolveInfo(bool(ok), it, res, history)
    return out
