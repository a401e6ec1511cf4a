"""Growth and non-degeneracy exponents, density, porosity, box dimension and comparison."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateData, EmptyBall, EmptyFB, HypothesisViolation
from .free_boundary import FreeBoundaryCells, default_thresholds
from .grid import ScalarField, ball_mask, check_same_grid, intrinsic_norm, sup_on_ball

MIN_RADII = 4


def dyadic_radii(h: float, lo_cells: float = 8, hi: float = 0.25, per_octave: int = 2) -> tuple:
    """Radii ``hi * 2^(-k/m)`` down to ``lo_cells * h``.

    ``m`` starts at ``per_octave`` and is raised until the interval holds at
    least four radii (it spans a single octave at ``h = 1/64``).
    """
    lo = lo_cells * h * (1 - 1e-9)
    if hi < lo:
        return ()
    octaves = np.log2(hi / lo)
    m = per_octave
    while octaves > 1e-6 and int(np.floor(octaves * m + 1e-9)) + 1 < MIN_RADII:
        m += 1
    out = []
    k = 0
    while (r := hi * 2.0 ** (-k / m)) >= lo:
        out.append(r)
        k += 1
    return tuple(out)


@dataclass
class ExponentFit:
    point: tuple
    radii: np.ndarray
    sups: np.ndarray
    slope: float
    stderr: float
    intercept: float

    def line(self, label: str = "") -> str:
        x = ", ".join(f"{c:.6g}" for c in self.point)
        return f"{label}({x}) slope={self.slope:.4f} +/- {self.stderr:.4f} radii={len(self.radii)}"


def _ols(x: np.ndarray, y: np.ndarray):
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = max(len(x) - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return float(coef[0]), float(np.sqrt(cov[0, 0])), float(coef[1])


def growth_exponent(field: ScalarField, y, radii) -> ExponentFit:
    """OLS slope of ``log sup_{B_r(y)} field`` against ``log r``."""
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    if len(radii) < MIN_RADII:
        raise DegenerateData(f"need at least {MIN_RADII} radii, got {len(radii)}")
    sups = np.array([sup_on_ball(field, y, r) for r in radii])
    if np.any(sups <= 0):
        raise DegenerateData("nonpositive supremum on some ball; shrink the radii list")
    slope, se, icpt = _ols(np.log(radii), np.log(sups))
    return ExponentFit(tuple(float(c) for c in np.atleast_1d(y)), radii, sups, slope, se, icpt)


def nondegeneracy_threshold(g_inf: float) -> float:
    """``0.5 (C_g/2)^{1/3}`` with ``C_g = g_inf / 2``."""
    return 0.5 * (g_inf / 4.0) ** (1.0 / 3.0)


@dataclass
class NondegeneracyProfile:
    point: tuple
    radii: np.ndarray
    ratios: np.ndarray
    threshold: float

    @property
    def min_ratio(self) -> float:
        return float(self.ratios.min())

    @property
    def passed(self) -> bool:
        return self.min_ratio >= self.threshold


def nondegeneracy_profile(u: ScalarField, v: ScalarField, y, radii, g_inf: float,
                          clamp_tol=None) -> NondegeneracyProfile:
    """Ratios ``sup_{B_r(y)} (u^{1/2} + v^{1/3}) / r^{2/3}`` per radius."""
    norm = intrinsic_norm(u, v, clamp_tol)
    if norm.max() <= 0:
        raise DegenerateData("the intrinsic positivity set is empty")
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    sups = np.array([sup_on_ball(norm, y, r) for r in radii])
    if np.all(sups <= 0):
        raise DegenerateData(f"{tuple(np.atleast_1d(y))} is not in the closure of the positivity set")
    return NondegeneracyProfile(tuple(float(c) for c in np.atleast_1d(y)), radii, sups / radii ** (2.0 / 3.0),
                                nondegeneracy_threshold(g_inf))


def density_profile(u: ScalarField, v: ScalarField, x0, radii, tau_u=None, tau_v=None) -> np.ndarray:
    """Node-count fraction of ``B_r(x0)`` occupied by ``{u > τ_u} ∪ {v > τ_v}``, per radius."""
    grid = check_same_grid(u, v)
    du, dv = default_thresholds(grid)
    tau_u = du if tau_u is None else tau_u
    tau_v = dv if tau_v is None else tau_v
    positive = (u.values > tau_u) | (v.values > tau_v)
    out = []
    for r in radii:
        mask = ball_mask(grid, x0, r)
        if not mask.any():
            raise EmptyBall(f"no node within {r} of {x0}")
        out.append(positive[mask].sum() / mask.sum())
    return np.array(out)


def porosity_estimate(fb: FreeBoundaryCells, radii, max_points: int = 64) -> float:
    """Smallest over FB sample points and radii of the largest free-ball fraction.

    For an FB cell centre x and radius r, search centres y on a half-cell
    lattice inside ``B_r(x)`` for the largest δ with ``B_{δr}(y) ⊆ B_r(x)``
    avoiding every FB cell (cells treated as closed squares).  Sample points
    are FB cells whose largest ball stays inside the domain, thinned to at
    most ``max_points``.
    """
    if fb.empty:
        raise EmptyFB("free boundary is empty")
    grid = fb.grid
    h = grid.h
    lo, hi = np.asarray(grid.lo), np.asarray(grid.hi)
    centers = fb.centers
    rmax = max(radii)
    inside = np.all((centers - rmax >= lo - 1e-12) & (centers + rmax <= hi + 1e-12), axis=1)
    pool = centers[inside] if inside.any() else centers
    pick = np.unique(np.linspace(0, len(pool) - 1, min(max_points, len(pool))).round().astype(int))
    # half-cell raster: FB squares are closed 3x3 blocks, and the nearest point of
    # a square to a raster point is itself a raster point, so the EDT is exact
    raster = np.zeros(tuple(2 * n - 1 for n in grid.dims), dtype=bool)
    for idx in fb.indices:
        raster[tuple(slice(2 * i, 2 * i + 3) for i in idx)] = True
    clearance = ndimage.distance_transform_edt(~raster) * (h / 2)
    rcoords = np.stack(np.meshgrid(*[lo[k] + (h / 2) * np.arange(m) for k, m in enumerate(raster.shape)],
                                   indexing="ij"), axis=-1)
    wall = np.minimum(rcoords - lo, hi - rcoords).min(axis=-1)
    best = np.inf
    for x in pool[pick]:
        ci = np.rint((x - lo) / (h / 2)).astype(int)
        for r in radii:
            k = int(np.floor(r / (h / 2)))
            sl = tuple(slice(max(c - k, 0), c + k + 1) for c in ci)
            Y = rcoords[sl]
            # stay inside the domain, where the free boundary is actually known
            room = np.minimum(r - np.linalg.norm(Y - x, axis=-1), wall[sl])
            delta = float(np.minimum(room, clearance[sl]).max(initial=0.0)) / r
            best = min(best, max(delta, 0.0))
    if best <= 0:
        warnings.warn("porosity estimate is zero: the free boundary fills the sampled balls", RuntimeWarning,
                      stacklevel=2)
    return float(best)


def box_dimension(fb: FreeBoundaryCells, sizes=None) -> ExponentFit:
    """Slope of ``log N(s)`` against ``log(1/s)`` for dyadic box sizes ``s = 2^k h``."""
    if fb.empty:
        raise EmptyFB("free boundary is empty")
    h = fb.grid.h
    idx = fb.indices
    if sizes is None:
        sizes = [h * 2**k for k in range(0, 5)]
    sizes = np.asarray(sizes, dtype=float)
    if len(sizes) < 4 or np.any(sizes < h * (1 - 1e-9)):
        raise DegenerateData("need at least 4 box sizes, all >= h")
    counts = []
    for s in sizes:
        k = max(int(round(s / h)), 1)
        counts.append(len(np.unique(idx // k, axis=0)))
    counts = np.asarray(counts, dtype=float)
    slope, se, icpt = _ols(np.log(1.0 / sizes), np.log(counts))
    return ExponentFit((), sizes, counts, slope, se, icpt)


@dataclass
class ComparisonReport:
    min_difference: float
    tolerance: float
    pair1: object
    pair2: object

    @property
    def passed(self) -> bool:
        return self.min_difference >= -self.tolerance

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return f"comparison min(v1 - v2) = {self.min_difference:.3e} (tol {self.tolerance:.1e}): {state}"


def comparison_experiment(spec1, spec2, schedule=None, params=None, tolerance: float | None = None) -> ComparisonReport:
    """Solve both specs and report ``min(v1 - v2)``.

    Requires ``g1 < g2`` at every node and ``ψ1 >= ψ2`` on the boundary.
    The pass tolerance defaults to twice the combined residual tolerances
    of the two inner solvers.
    """
    from .coupled import CoupledParams, solve_coupled

    grid = check_same_grid(spec1.f, spec2.f)
    if not np.all(spec1.g.values < spec2.g.values):
        raise HypothesisViolation("need g1 < g2 at every node")
    bmask = grid.boundary_mask
    if not np.all(spec1.psi[bmask] >= spec2.psi[bmask]):
        raise HypothesisViolation("need psi1 >= psi2 on the boundary")
    params = params or CoupledParams()
    if tolerance is None:
        tolerance = 2 * (params.poisson.residual_tol + params.infinity.residual_tol)
    p1 = solve_coupled(spec1, schedule, params)
    p2 = solve_coupled(spec2, schedule, params)
    return ComparisonReport(float((p1.v.values - p2.v.values).min()), tolerance, p1, p2)
