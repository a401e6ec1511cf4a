"""Penalized coupled system and its fixed-point solution.

For ``ε > 0`` the pair solves

    Δ∞ u = f β_ε(v),    Δ v = g β_ε(u)

with Dirichlet data ``(φ, ψ)``.  The map ``T(ū, v̄) = (v, u)`` solves the
v-equation with ``ū`` frozen and the u-equation with ``v̄`` frozen; Picard
iteration of ``T`` at fixed ε, warm-started along a decreasing ε schedule,
approximates a solution of the limiting system.
"""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParameter, FixedPointNonConvergence, HypothesisViolation, NonConvergence
from .grid import Grid, ScalarField, check_same_grid, laplacian_interior
from .infinity import (
    InfinitySolveParams,
    boundary_values,
    infinity_laplacian_interior,
    solve_infinity_poisson,
    transfinite_interpolant,
)
from .laplace import PoissonParams, solve_poisson

EPS_FLOOR_FACTOR = 2.0


def beta_eps(s, eps: float):
    """Quintic smoothstep switch ``β(s/ε)``; 0 for ``s <= 0`` and 1 for ``s >= ε``."""
    if eps <= 0:
        raise BadParameter("eps must be positive")
    t = np.clip(np.asarray(s, dtype=float) / eps, 0.0, 1.0)
    out = t**3 * (10.0 - 15.0 * t + 6.0 * t**2)
    return float(out) if out.ndim == 0 else out


@dataclass
class ProblemSpec:
    """Sources ``f, g`` and boundary traces ``φ`` (for u) and ``ψ`` (for v).

    ``phi`` and ``psi`` accept anything :func:`boundary_values` does and are
    stored as full-grid arrays with zeros in the interior.  When
    ``c0_check`` is set, ``min(f, g) >= c0_check`` is enforced.
    """

    grid: Grid
    f: ScalarField
    g: ScalarField
    phi: object
    psi: object
    c0_check: float | None = None

    def __post_init__(self):
        check_same_grid(self.f, self.g)
        if self.f.grid != self.grid:
            raise BadParameter("sources live on a different grid")
        self.phi = boundary_values(self.grid, self.phi)
        self.psi = boundary_values(self.grid, self.psi)
        if self.c0_check is not None:
            low = float(np.minimum(self.f.values, self.g.values).min())
            if low < self.c0_check:
                raise HypothesisViolation(f"min(f, g) = {low:.3e} is below c0 = {self.c0_check:.3e}")


@dataclass(frozen=True)
class PenalizationSchedule:
    eps: tuple = (1e-1, 1e-2, 1e-3)
    per_eps_tol: float = 1e-6
    fixed_point_max_iters: int = 60

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        object.__setattr__(self, "eps", eps)
        if not eps:
            raise BadParameter("schedule needs at least one eps")
        if any(e <= 0 for e in eps):
            raise BadParameter("eps values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise BadParameter("eps values must be strictly decreasing")
        if self.per_eps_tol <= 0 or self.fixed_point_max_iters < 1:
            raise BadParameter("bad fixed-point tolerance or iteration cap")

    def check_floor(self, grid: Grid) -> None:
        floor = EPS_FLOOR_FACTOR * grid.h**2
        if self.eps[-1] < floor:
            raise BadParameter(f"final eps {self.eps[-1]:.3e} is below the floor 2h^2 = {floor:.3e}")


@dataclass(frozen=True)
class CoupledParams:
    infinity: InfinitySolveParams = InfinitySolveParams()
    poisson: PoissonParams = PoissonParams(method="direct")
    damping: float = 1.0
    acceptance_tol: float = 5e-2

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise BadParameter("damping must lie in (0, 1]")


@dataclass
class SolutionPair:
    u: ScalarField
    v: ScalarField
    eps: float
    residuals: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    tolerance: float = 5e-2

    @property
    def accepted(self) -> bool:
        return bool(self.residuals) and all(r <= self.tolerance for r in self.residuals.values())

    def summary(self) -> str:
        lines = [f"eps = {self.eps:.6g}", f"delta = {residual_delta(self.u.grid, self.eps):.6g}"]
        lines += [f"{k} = {val:.6e}" for k, val in self.residuals.items()]
        lines.append(f"iterations = {len(self.history)}")
        lines.append(f"accepted = {self.accepted}")
        return "\n".join(lines)


def residual_delta(grid: Grid, eps_final: float) -> float:
    return max(2.0 * eps_final, grid.h)


def pair_residuals(u: ScalarField, v: ScalarField, spec: ProblemSpec, eps_final: float) -> dict:
    """The four acceptance residuals of a candidate pair.

    One-sided residuals of both inequalities over all interior nodes, and
    two-sided residuals of each equation on the other component's
    positivity set ``{· > δ}`` with ``δ = max(2 ε_final, h)``.
    """
    grid = check_same_grid(u, v, spec.f)
    inner = grid.interior
    delta = residual_delta(grid, eps_final)
    ru = infinity_laplacian_interior(u.values, grid.h) - spec.f.values[inner]
    rv = laplacian_interior(v.values, grid.h) - spec.g.values[inner]
    on_v = v.values[inner] > delta
    on_u = u.values[inner] > delta

    def sup(a):
        return float(a.max()) if a.size else 0.0

    return {
        "infinity_inequality": max(sup(ru), 0.0),
        "infinity_equation": sup(np.abs(ru[on_v])),
        "laplace_inequality": max(sup(rv), 0.0),
        "laplace_equation": sup(np.abs(rv[on_u])),
    }


def t_map(ubar: ScalarField, vbar: ScalarField, eps: float, spec: ProblemSpec,
          params: CoupledParams | None = None, warm: tuple | None = None):
    """One application of ``T(ū, v̄) = (v, u)``.

    ``v`` solves ``Δ_h v = g β_ε(ū)`` with data ψ and ``u`` solves
    ``Δ∞,h u = f β_ε(v̄)`` with data φ.  ``warm`` optionally gives starting
    guesses ``(u0, v0)`` for the two inner solves.
    """
    params = params or CoupledParams()
    grid = check_same_grid(ubar, vbar, spec.f)
    u0, v0 = warm if warm is not None else (ubar, vbar)
    src_v = ScalarField(grid, spec.g.values * beta_eps(ubar.values, eps), "source")
    src_u = ScalarField(grid, spec.f.values * beta_eps(vbar.values, eps), "source")
    v = solve_poisson(grid, src_v, spec.psi, params.poisson, warm_start=v0)
    u = solve_infinity_poisson(grid, src_u, spec.phi, params.infinity, warm_start=u0)
    return v, u


def _initial_pair(spec: ProblemSpec):
    grid = spec.grid
    return (
        ScalarField(grid, transfinite_interpolant(grid, spec.phi), "solution"),
        ScalarField(grid, transfinite_interpolant(grid, spec.psi), "solution"),
    )


def solve_penalized(spec: ProblemSpec, eps: float, params: CoupledParams | None = None,
                    warm_start=None, schedule: PenalizationSchedule | None = None) -> SolutionPair:
    """Picard iteration of ``T`` at fixed ε until both sup-changes drop below tolerance.

    If an inner infinity solve can only reach a larger regularization than
    requested, later sweeps keep that larger value (see SolveInfo.eta); the
    history records it.
    """
    params = params or CoupledParams()
    schedule = schedule or PenalizationSchedule(eps=(eps,))
    grid = spec.grid
    if isinstance(warm_start, SolutionPair):
        u, v = warm_start.u, warm_start.v
    elif warm_start is not None:
        u, v = warm_start
    else:
        u, v = _initial_pair(spec)
    history = []
    fresh = warm_start is None
    for it in range(1, schedule.fixed_point_max_iters + 1):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NonConvergence)
            # the first sweep without a warm start lets the u-solve build its own guess
            v_new, u_new = t_map(u, v, eps, spec, params, warm=(None, None) if fresh else None)
        fresh = False
        if params.damping < 1:
            u_new = u.like(params.damping * u_new.values + (1 - params.damping) * u.values)
            v_new = v.like(params.damping * v_new.values + (1 - params.damping) * v.values)
        du = float(np.abs(u_new.values - u.values).max())
        dv = float(np.abs(v_new.values - v.values).max())
        info = getattr(u_new, "info", None)
        record = {"eps": eps, "iteration": it, "du": du, "dv": dv,
                  "inner_warnings": [str(w.message) for w in caught]}
        if info is not None:
            record["eta"] = info.eta
            target = params.infinity.regularization * grid.h**2
            if info.eta > target * (1 + 1e-9):
                params = dataclasses.replace(
                    params, infinity=dataclasses.replace(params.infinity, regularization=info.eta / grid.h**2)
                )
        history.append(record)
        u, v = u_new, v_new
        if du < schedule.per_eps_tol and dv < schedule.per_eps_tol:
            break
    else:
        raise FixedPointNonConvergence(
            f"Picard iteration at eps={eps:g} did not settle in {schedule.fixed_point_max_iters} sweeps "
            f"(last changes du={du:.3e}, dv={dv:.3e})",
            changes=(du, dv),
            eps=eps,
            pair=SolutionPair(u, v, eps, history=history, tolerance=params.acceptance_tol),
        )
    pair = SolutionPair(u, v, eps, history=history, tolerance=params.acceptance_tol)
    pair.residuals = pair_residuals(u, v, spec, eps)
    pair.params = params
    return pair


def solve_coupled(spec: ProblemSpec, schedule: PenalizationSchedule | None = None,
                  params: CoupledParams | None = None) -> SolutionPair:
    """Warm-started continuation of :func:`solve_penalized` over the ε schedule.

    The returned pair carries the four acceptance residuals for the final ε
    and the concatenated iteration history; ``pair.accepted`` tells whether
    all of them are within ``params.acceptance_tol``.
    """
    schedule = schedule or PenalizationSchedule()
    params = params or CoupledParams()
    schedule.check_floor(spec.grid)
    pair = None
    history = []
    for eps in schedule.eps:
        try:
            pair = solve_penalized(spec, eps, params, warm_start=pair, schedule=schedule)
        except FixedPointNonConvergence as exc:
            exc.eps = eps
            raise
        params = pair.params
        history.extend(pair.history)
    pair.history = history
    return pair
