"""Discrete infinity Laplacian and a Dirichlet solver for ``Δ∞u = s``.

The operator is the direct composition of centered differences,
``<H_h u p_h, p_h>`` with ``p_h`` the centered gradient.  It vanishes
wherever the discrete gradient does; no regularization enters the operator.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BadParameter, NonConvergence
from .grid import Grid, ScalarField, central_gradient, central_hessian, check_same_grid, laplacian_interior
from .stencils import derivative_matrices, interior_index, laplacian_matrix


@dataclass(frozen=True)
class InfinitySolveParams:
    """Controls for :func:`solve_infinity_poisson`.

    The discrete equation actually solved is
    ``Δ∞,h u + η Δ_h u = s`` with ``η = regularization * h**2``.  The extra
    term is below the scheme's own truncation error on smooth regions but
    pins down nodes whose centered gradient vanishes (symmetric extrema),
    where the pure centered equation leaves the value undetermined.

    ``method='newton'`` runs damped Newton, falling back to continuation in
    η from ``eta_start`` down by ``eta_factor`` per stage.  If a stage fails
    the solve stops at the smallest η reached, reports it in
    ``SolveInfo.eta`` and is flagged as not converged.
    ``method='explicit'`` runs the pseudo-time sweep
    ``u += dt * residual`` with ``dt = tau * h**2 / max(gradient_floor**2,
    max|grad u|**2)``.
    """

    tau: float = 0.2
    max_iterations: int = 400
    residual_tol: float = 1e-6
    gradient_floor: float = 1e-8
    method: str = "newton"
    regularization: float = 1.0
    eta_start: float = 1.0
    eta_factor: float = 0.5
    stage_iterations: int = 40
    nested: bool = True

    def __post_init__(self):
        if self.tau <= 0:
            raise BadParameter("tau must be positive")
        if self.residual_tol <= 0:
            raise BadParameter("residual_tol must be positive")
        if self.gradient_floor < 0:
            raise BadParameter("gradient_floor must be nonnegative")
        if self.regularization < 0:
            raise BadParameter("regularization must be nonnegative")
        if not 0 < self.eta_factor < 1:
            raise BadParameter("eta_factor must lie in (0, 1)")
        if self.method not in ("newton", "explicit"):
            raise BadParameter(f"unknown method {self.method!r}")


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    residual: float
    history: list
    eta: float = 0.0


def infinity_laplacian_interior(values: np.ndarray, h: float) -> np.ndarray:
    p = central_gradient(values, h)
    H = central_hessian(values, h)
    n = values.ndim
    out = np.zeros_like(p[0])
    for j in range(n):
        out += H[j, j] * p[j] ** 2
        for k in range(j + 1, n):
            out += 2 * H[j, k] * p[j] * p[k]
    return out


def infinity_residual(field: ScalarField, source: ScalarField) -> ScalarField:
    """``Δ∞,h u - s`` at interior nodes, zero on the boundary."""
    grid = check_same_grid(field, source)
    res = np.zeros(grid.dims)
    res[grid.interior] = infinity_laplacian_interior(field.values, grid.h) - source.values[grid.interior]
    return ScalarField(grid, res, "residual")


def boundary_values(grid: Grid, boundary) -> np.ndarray:
    """Full-grid array whose boundary nodes carry the trace.

    ``boundary`` may be a ScalarField, an array shaped like the grid, or a
    callable of coordinate arrays.
    """
    if isinstance(boundary, ScalarField):
        check_same_grid(boundary, ScalarField(grid, np.zeros(grid.dims)))
        vals = boundary.values
    elif callable(boundary):
        with np.errstate(all="ignore"):
            vals = np.broadcast_to(np.asarray(boundary(*grid.coords), dtype=float), grid.dims)
    else:
        vals = np.broadcast_to(np.asarray(boundary, dtype=float), grid.dims)
    out = np.zeros(grid.dims)
    out[grid.boundary_mask] = vals[grid.boundary_mask]
    if not np.all(np.isfinite(out)):
        raise BadParameter("boundary trace is not finite")
    return out


def transfinite_interpolant(grid: Grid, bvals: np.ndarray) -> np.ndarray:
    """Coons-patch (bilinearly blended) interpolation of the boundary trace."""
    if grid.ndim == 1:
        t = (grid.axes[0] - grid.lo[0]) / (grid.hi[0] - grid.lo[0])
        return bvals[0] * (1 - t) + bvals[-1] * t
    s = ((grid.axes[0] - grid.lo[0]) / (grid.hi[0] - grid.lo[0]))[:, None]
    t = ((grid.axes[1] - grid.lo[1]) / (grid.hi[1] - grid.lo[1]))[None, :]
    left, right = bvals[0, :][None, :], bvals[-1, :][None, :]
    bottom, top = bvals[:, 0][:, None], bvals[:, -1][:, None]
    out = (1 - s) * left + s * right + (1 - t) * bottom + t * top
    out -= (
        (1 - s) * (1 - t) * bvals[0, 0]
        + s * (1 - t) * bvals[-1, 0]
        + (1 - s) * t * bvals[0, -1]
        + s * t * bvals[-1, -1]
    )
    out[grid.boundary_mask] = bvals[grid.boundary_mask]
    return out


def infinity_jacobian(values: np.ndarray, grid: Grid) -> sp.csr_matrix:
    """Derivative of ``u -> Δ∞,h u`` (full-grid rows, boundary rows empty)."""
    h, n = grid.h, grid.ndim
    mats = derivative_matrices(grid)
    p = central_gradient(values, h)
    H = central_hessian(values, h)

    def full(a):
        out = np.zeros(grid.dims)
        out[grid.interior] = a
        return sp.diags(out.ravel())

    Hp = []
    for j in range(n):
        acc = H[j, j] * p[j]
        for k in range(n):
            if k != j:
                acc = acc + H[min(j, k), max(j, k)] * p[k]
        Hp.append(acc)
    J = None
    for j in range(n):
        term = full(p[j] ** 2) @ mats[(j, j)] + full(2 * Hp[j]) @ mats[(j,)]
        J = term if J is None else J + term
        for k in range(j + 1, n):
            J = J + full(2 * p[j] * p[k]) @ mats[(j, k)]
    return J.tocsr()


def _explicit_step_size(values, grid, params):
    p = central_gradient(values, grid.h)
    gmax2 = max(float(sum(c**2 for c in p).max()), params.gradient_floor**2)
    if gmax2 == 0.0:
        gmax2 = 1.0
    return params.tau * grid.h**2 / gmax2


class _Problem:
    """Interior unknowns, source and regularized residual for one grid."""

    def __init__(self, grid: Grid, source: np.ndarray, params: InfinitySolveParams):
        self.grid = grid
        self.h = grid.h
        self.s = source[grid.interior]
        self.index = interior_index(grid)
        self.eta_final = params.regularization * grid.h**2
        self._lap = None

    @property
    def lap(self):
        if self._lap is None:
            self._lap = laplacian_matrix(self.grid)[self.index][:, self.index]
        return self._lap

    def residual(self, u, eta):
        F = infinity_laplacian_interior(u, self.h) - self.s
        if eta:
            F = F + eta * laplacian_interior(u, self.h)
        return F

    def jacobian(self, u, eta):
        J = infinity_jacobian(u, self.grid)[self.index][:, self.index]
        if eta:
            J = J + eta * self.lap
        return J.tocsc()


def _newton(prob: _Problem, u, eta, tol, max_iter, history):
    """Damped Newton on the interior unknowns; returns (u, residual, iterations, ok)."""
    F = prob.residual(u, eta)
    res = float(np.abs(F).max())
    norm = float(np.linalg.norm(F))
    it = 0
    while res > tol and it < max_iter:
        it += 1
        try:
            delta = spla.splu(prob.jacobian(u, eta), permc_spec="MMD_AT_PLUS_A").solve(-F.ravel())
        except RuntimeError:
            return u, res, it, False
        lam = 1.0
        for _ in range(25):
            trial = u.copy()
            trial.ravel()[prob.index] += lam * delta
            F_trial = prob.residual(trial, eta)
            n_trial = float(np.linalg.norm(F_trial))
            if np.isfinite(n_trial) and n_trial < (1 - 1e-4 * lam) * norm:
                break
            lam *= 0.5
        else:
            return u, res, it, False
        u, F, norm = trial, F_trial, n_trial
        res = float(np.abs(F).max())
        history.append(res)
    return u, res, it, res <= tol


def _continuation(prob, u, params, budget, history):
    """Newton along a geometric ladder of eta values ending at the final eta.

    When a stage fails the last converged iterate is kept, so the result is
    the solution for the smallest eta reached.  Returns
    ``(u, residual, iterations, ok, eta_reached)``.
    """
    etas = []
    eta = max(params.eta_start, prob.eta_final)
    while eta > prob.eta_final * (1 + 1e-9):
        etas.append(eta)
        eta *= params.eta_factor
    etas.append(prob.eta_final)
    used = 0
    best = None
    res, ok = np.inf, False
    for eta in etas:
        last = eta == etas[-1]
        tol = params.residual_tol if last else max(1e-4, params.residual_tol)
        trial, res, it, ok = _newton(prob, u.copy(), eta, tol, min(params.stage_iterations, budget - used), history)
        used += it
        if not ok:
            break
        u = trial
        best = (u, res, eta)
        if used >= budget:
            break
    if best is None:
        return u, res, used, False, etas[0]
    u, res_best, eta_best = best
    done = ok and eta_best == etas[-1]
    return u, (res_best if done else res), used, done, eta_best
def _coarsen(grid: Grid):
    if any((n - 1) % 2 for n in grid.dims) or min(grid.dims) < 33:
        return None
    return Grid(grid.lo, grid.hi, 2 * grid.h, tuple((n - 1) // 2 + 1 for n in grid.dims))


def prolong(coarse_values: np.ndarray, fine: Grid) -> np.ndarray:
    """Linear interpolation from the 2x coarser nested lattice."""
    out = np.empty(fine.dims)
    if fine.ndim == 1:
        out[::2] = coarse_values
        out[1::2] = 0.5 * (coarse_values[:-1] + coarse_values[1:])
        return out
    out[::2, ::2] = coarse_values
    out[1::2, ::2] = 0.5 * (coarse_values[:-1, :] + coarse_values[1:, :])
    out[::2, 1::2] = 0.5 * (coarse_values[:, :-1] + coarse_values[:, 1:])
    out[1::2, 1::2] = 0.25 * (
        coarse_values[:-1, :-1] + coarse_values[1:, :-1] + coarse_values[:-1, 1:] + coarse_values[1:, 1:]
    )
    return out


def _newton_solve(grid, source_vals, bvals, params, warm, history):
    prob = _Problem(grid, source_vals, params)
    budget = params.max_iterations
    if warm is None and params.nested:
        coarse = _coarsen(grid)
        if coarse is not None:
            sl = (slice(None, None, 2),) * grid.ndim
            # even a coarse solve stuck at a larger eta is a useful guess
            cu = _newton_solve(coarse, source_vals[sl], bvals[sl], params, None, [])[0]
            warm = prolong(cu, grid)
            warm[grid.boundary_mask] = bvals[grid.boundary_mask]
    used = 0
    if warm is not None:
        u, res, used, ok = _newton(prob, warm.copy(), prob.eta_final, params.residual_tol,
                                   min(params.stage_iterations, budget), history)
        if ok:
            return u, res, used, ok, prob.eta_final
        start = warm
    else:
        start = transfinite_interpolant(grid, bvals)
    u, res, more, ok, eta = _continuation(prob, start.copy(), params, max(budget - used, 1), history)
    return u, res, used + more, ok, eta


def solve_infinity_poisson(
    grid: Grid,
    source: ScalarField,
    boundary,
    params: InfinitySolveParams | None = None,
    warm_start: ScalarField | None = None,
) -> ScalarField:
    """Solve ``Δ∞,h u (+ η Δ_h u) = source`` with Dirichlet data.

    Without a warm start the initial guess is the Coons-patch interpolant of
    the boundary trace (or, with ``params.nested``, the prolonged solution on
    the 2x coarser grid).  Returns a ScalarField whose ``info`` is a
    :class:`SolveInfo`; hitting ``max_iterations`` emits a
    :class:`NonConvergence` warning instead of raising.
    """
    params = params or InfinitySolveParams()
    check_same_grid(source, ScalarField(grid, np.zeros(grid.dims)))
    bvals = boundary_values(grid, boundary)
    warm = None
    if warm_start is not None:
        warm = np.array(warm_start.values, dtype=float)
        warm[grid.boundary_mask] = bvals[grid.boundary_mask]
    history = []
    if params.method == "newton":
        u, res, it, ok, eta = _newton_solve(grid, source.values, bvals, params, warm, history)
    else:
        u, res, it, ok = _explicit_solve(grid, source.values, bvals, params, warm, history)
        eta = params.regularization * grid.h**2
    u[grid.boundary_mask] = bvals[grid.boundary_mask]
    info = SolveInfo(bool(ok), it, float(res), history, float(eta))
    if not info.converged:
        warnings.warn(
            NonConvergence(
                f"infinity solve stopped after {it} iterations with residual {res:.3e} (eta {eta:.2e})",
                iterations=it,
                residual=res,
            ),
            stacklevel=2,
        )
    out = ScalarField(grid, u, "solution")
    out.info = info
    return out


def _explicit_solve(grid, source_vals, bvals, params, warm, history):
    prob = _Problem(grid, source_vals, params)
    u = transfinite_interpolant(grid, bvals) if warm is None else warm.copy()
    F = prob.residual(u, prob.eta_final)
    res = float(np.abs(F).max())
    it = 0
    while res > params.residual_tol and it < params.max_iterations:
        it += 1
        u[grid.interior] += _explicit_step_size(u, grid, params) * F
        F = prob.residual(u, prob.eta_final)
        res = float(np.abs(F).max())
        history.append(res)
    return u, res, it, res <= params.residual_tol
