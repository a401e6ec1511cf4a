"""Closed-form solution pairs used as oracles.

Every constant here is re-derived from the operator definitions:

* ``Δ∞(c r^{4/3}) = c³ (4/3)³ (1/3) = c³ 64/81`` so ``c = 3^{4/3}/4``
  makes the right-hand side 1.  The same profile in one variable,
  ``c (x₁)₊^{4/3}``, satisfies ``(u')² u'' = 1`` for ``x₁ > 0``.
* ``Δ(¼|x|²) = 1`` in two dimensions, ``Δ(½ y²) = 1``.
* ``((t)₊^{2+α})'' = (2+α)(1+α) (t)₊^α``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BadParameter, OracleFailure
from .grid import Grid, laplacian_interior, sample
from .infinity import infinity_laplacian_interior

RADIAL_COEFF = 3.0 ** (4.0 / 3.0) / 4.0
SINGULAR_COLLAR = 0.15
FB_COLLAR_CELLS = 3
ORACLE_CONSTANT = 50.0


def _one(x, y):
    return np.ones_like(np.asarray(x, dtype=float))


def _radial_u(x, y):
    return RADIAL_COEFF * (x * x + y * y) ** (2.0 / 3.0)


def c_alpha(alpha: float) -> float:
    return (2.0 + alpha) * (1.0 + alpha)


@dataclass
class ExactPair:
    """A closed-form pair with its data and documented free-boundary geometry.

    ``u_region`` / ``v_region`` take ``(x, y, h)`` and return the mask where
    the u- and v-equations are asserted by :func:`verify_example`.
    ``expected`` maps inclusion check names ``'a'``, ``'b'``, ``'c'`` to the
    outcome the example is meant to produce.
    """

    name: str
    u: Callable
    v: Callable
    f: Callable
    g: Callable
    u_region: Callable
    v_region: Callable
    fb: str
    expected: dict
    coupled: bool = True
    nonnegative: bool = True
    fb_point: tuple = (0.0, 0.0)
    params: dict = field(default_factory=dict)
    dimension: int = 2

    def fields(self, grid: Grid):
        return (
            sample(self.u, grid, "solution"),
            sample(self.v, grid, "solution"),
            sample(self.f, grid, "source"),
            sample(self.g, grid, "source"),
        )


def example_radial() -> ExactPair:
    """``u = c|x|^{4/3}``, ``v = ¼|x|²`` with ``f = g = 1``; every free boundary is the origin."""
    return ExactPair(
        name="radial",
        u=_radial_u,
        v=lambda x, y: 0.25 * (x * x + y * y),
        f=_one,
        g=_one,
        u_region=lambda x, y, h: np.hypot(x, y) >= SINGULAR_COLLAR,
        v_region=lambda x, y, h: np.hypot(x, y) >= FB_COLLAR_CELLS * h,
        fb="all free boundaries are the origin",
        expected={"a": True, "b": True, "c": True},
    )


def example_halfspace(alpha: float = 0.0, eps: float = 0.0) -> ExactPair:
    """``u = c(x₁)₊^{4/3}``, ``v = (x₁-ε)₊^{2+α}``, ``f = 1``, ``g = C_α (x₁-ε)₊^α``.

    ``α = 0`` is admitted only with ``ε = 0`` and then means the coupled pair
    ``v = ½(x₁)₊²``, ``g ≡ 1``.  For ``ε > 0`` the two free boundaries are
    the parallel lines ``x₁ = 0`` and ``x₁ = ε`` and ``inf g = 0``.
    """
    if alpha < 0 or not 0 <= eps < 0.5:
        raise BadParameter("need alpha >= 0 and 0 <= eps < 1/2")
    if alpha == 0 and eps != 0:
        raise BadParameter("alpha = 0 is only meaningful with eps = 0")
    u = lambda x, y: RADIAL_COEFF * np.maximum(x, 0.0) ** (4.0 / 3.0)
    if alpha == 0:
        v = lambda x, y: 0.5 * np.maximum(x, 0.0) ** 2
        g = _one
    else:
        ca = c_alpha(alpha)
        v = lambda x, y: np.maximum(x - eps, 0.0) ** (2.0 + alpha)
        g = lambda x, y: ca * np.maximum(x - eps, 0.0) ** alpha

    def u_region(x, y, h):
        # Δ∞u = f asserted on {v > 0}; u's own 4/3-singularity at x₁ = 0 gets the fixed collar
        return (x > eps + FB_COLLAR_CELLS * h) & (x >= SINGULAR_COLLAR)

    def v_region(x, y, h):
        # Δv = g asserted on {u > 0}, away from both free-boundary lines
        return (x > FB_COLLAR_CELLS * h) & (np.abs(x - eps) > FB_COLLAR_CELLS * h)

    coupled = eps == 0 and alpha == 0
    return ExactPair(
        name="halfspace",
        u=u,
        v=v,
        f=_one,
        g=g,
        u_region=u_region,
        v_region=v_region,
        fb=("FB(u) = FB(v) = {x1 = 0}" if eps == 0 else
            f"FB(u) = {{x1 = 0}}, FB(v) = {{x1 = {eps:g}}}, coupled free boundary empty"),
        expected={"a": eps == 0, "b": True, "c": eps == 0},
        coupled=coupled,
        params={"alpha": alpha, "eps": eps},
    )


def example_uncoupled() -> ExactPair:
    """``u = c|x|^{4/3}``, ``v = ½y²``, ``f = g = 1``; ``FB(v) \\ FB(u)`` is the punctured line y = 0."""
    return ExactPair(
        name="uncoupled",
        u=_radial_u,
        v=lambda x, y: 0.5 * y * y,
        f=_one,
        g=_one,
        u_region=lambda x, y, h: (np.abs(y) > FB_COLLAR_CELLS * h) & (np.hypot(x, y) >= SINGULAR_COLLAR),
        v_region=lambda x, y, h: np.hypot(x, y) >= FB_COLLAR_CELLS * h,
        fb="FB(u) = origin, FB(v) = {y = 0}",
        expected={"a": True, "b": True, "c": True},
    )


def example_shifted_paraboloid(eps: float) -> ExactPair:
    """Radial u with ``v = ¼|x|² - ε²``, negative on the disk ``r < 2ε``."""
    if not 0 < eps < 0.25:
        raise BadParameter("need 0 < eps < 1/4")
    return ExactPair(
        name="shifted-paraboloid",
        u=_radial_u,
        v=lambda x, y: 0.25 * (x * x + y * y) - eps**2,
        f=_one,
        g=_one,
        u_region=lambda x, y, h: np.hypot(x, y) >= max(SINGULAR_COLLAR, 2 * eps + FB_COLLAR_CELLS * h),
        v_region=lambda x, y, h: np.hypot(x, y) >= FB_COLLAR_CELLS * h,
        fb="v < 0 on the disk r < 2 eps; pair is not nonnegative",
        expected={"a": False, "b": False, "c": False},
        coupled=False,
        nonnegative=False,
        params={"eps": eps},
    )


EXAMPLES = {
    "radial": example_radial,
    "halfspace": example_halfspace,
    "uncoupled": example_uncoupled,
    "shifted-paraboloid": example_shifted_paraboloid,
}


def get_example(name: str, **params) -> ExactPair:
    try:
        factory = EXAMPLES[name]
    except KeyError:
        raise BadParameter(f"unknown example {name!r}; known: {', '.join(EXAMPLES)}") from None
    return factory(**params)


def oracle_residuals(pair: ExactPair, grid: Grid) -> dict:
    """Sup-norms of both operator residuals on the asserted regions of one grid."""
    u, v, f, g = pair.fields(grid)
    x, y = (c[grid.interior] for c in grid.coords)
    ru = infinity_laplacian_interior(u.values, grid.h) - f.values[grid.interior]
    rv = laplacian_interior(v.values, grid.h) - g.values[grid.interior]
    mu = pair.u_region(x, y, grid.h)
    mv = pair.v_region(x, y, grid.h)
    return {
        "u": float(np.abs(ru[mu]).max()) if mu.any() else 0.0,
        "v": float(np.abs(rv[mv]).max()) if mv.any() else 0.0,
    }


def _order(coarse: float, fine: float, floor: float = 1e-10) -> float:
    if coarse <= floor and fine <= floor:
        return float("inf")
    return float(np.log2(max(coarse, floor) / max(fine, floor)))


@dataclass
class OracleReport:
    name: str
    h: tuple
    residuals: dict
    orders: dict
    bound: tuple

    def lines(self):
        out = []
        for key in ("u", "v"):
            r0, r1 = self.residuals[key]
            out.append(
                f"{self.name} {key}-residual h={self.h[0]:.6g}: {r0:.3e}  h={self.h[1]:.6g}: {r1:.3e}  "
                f"order {self.orders[key]:.2f}"
            )
        return out


def verify_example(pair: ExactPair, grid: Grid, raise_on_failure: bool = True) -> OracleReport:
    """Residuals of the closed-form pair on ``grid`` and on its refinement by 2.

    Raises :class:`OracleFailure` if any residual exceeds ``50 h^{1.5}`` on
    its grid.  Exact (rounding-level) residuals report order ``inf``.
    """
    if grid.ndim != pair.dimension:
        raise BadParameter("grid dimension does not match the example")
    fine = Grid(grid.lo, grid.hi, grid.h / 2, tuple(2 * (n - 1) + 1 for n in grid.dims))
    r0 = oracle_residuals(pair, grid)
    r1 = oracle_residuals(pair, fine)
    report = OracleReport(
        name=pair.name,
        h=(grid.h, fine.h),
        residuals={k: (r0[k], r1[k]) for k in ("u", "v")},
        orders={k: _order(r0[k], r1[k]) for k in ("u", "v")},
        bound=(ORACLE_CONSTANT * grid.h**1.5, ORACLE_CONSTANT * fine.h**1.5),
    )
    if raise_on_failure:
        for k in ("u", "v"):
            for res, bound, h in zip(report.residuals[k], report.bound, report.h):
                if res > bound:
                    raise OracleFailure(f"{pair.name}: {k}-residual {res:.3e} exceeds {bound:.3e} at h={h:g}")
    return report
