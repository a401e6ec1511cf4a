"""Uniform box grids, node fields, centered stencils and the intrinsic pair norm.

Node arrays use ``indexing='ij'``: ``values[i, j]`` lives at
``(lo[0] + i*h, lo[1] + j*h)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np

from .errors import (
    BadParameter,
    BoundaryNode,
    EmptyBall,
    GridMismatch,
    NegativityViolation,
    NonDivisibleExtent,
    NonFiniteSample,
)

DIVISIBILITY_TOL = 1e-9
FIELD_KINDS = ("solution", "source", "residual", "derived")


@dataclass(frozen=True)
class Grid:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    h: float
    dims: tuple[int, ...]

    def __post_init__(self):
        if len(self.dims) not in (1, 2):
            raise BadParameter(f"only n in {{1, 2}} is supported, got n={len(self.dims)}")
        if min(self.dims) < 3:
            raise BadParameter(f"need at least 3 nodes per axis, got dims={self.dims}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(lo + self.h * np.arange(n) for lo, n in zip(self.lo, self.dims))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays, one per axis, each of shape ``dims``."""
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.dims, dtype=bool)
        for k in range(self.ndim):
            idx = [slice(None)] * self.ndim
            idx[k] = 0
            mask[tuple(idx)] = True
            idx[k] = -1
            mask[tuple(idx)] = True
        return mask

    @property
    def interior(self) -> tuple[slice, ...]:
        return (slice(1, -1),) * self.ndim

    def coord(self, node) -> np.ndarray:
        node = np.atleast_1d(node)
        return np.array([lo + self.h * i for lo, i in zip(self.lo, node)], dtype=float)

    def nearest_node(self, point) -> tuple[int, ...]:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        idx = np.rint((point - np.asarray(self.lo)) / self.h).astype(int)
        idx = np.clip(idx, 0, np.asarray(self.dims) - 1)
        return tuple(int(i) for i in idx)

    def is_interior(self, node) -> bool:
        node = np.atleast_1d(node)
        return len(node) == self.ndim and all(0 < i < n - 1 for i, n in zip(node, self.dims))

    def contains(self, point) -> bool:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return len(point) == self.ndim and bool(
            np.all(point >= np.asarray(self.lo) - 1e-12) and np.all(point <= np.asarray(self.hi) + 1e-12)
        )


def make_grid(lo, hi, h: float) -> Grid:
    lo = tuple(float(a) for a in np.atleast_1d(lo))
    hi = tuple(float(b) for b in np.atleast_1d(hi))
    if len(lo) != len(hi):
        raise BadParameter("lo and hi must have the same length")
    if h <= 0:
        raise BadParameter("h must be positive")
    dims = []
    for a, b in zip(lo, hi):
        if not b > a:
            raise BadParameter(f"empty extent [{a}, {b}]")
        ratio = (b - a) / h
        if abs(ratio - round(ratio)) > DIVISIBILITY_TOL:
            raise NonDivisibleExtent(f"extent {b - a} is not a multiple of h={h}")
        dims.append(int(round(ratio)) + 1)
    return Grid(lo, hi, float(h), tuple(dims))


def unit_box(n: int, h: float) -> Grid:
    """The box [-1, 1]^n."""
    return make_grid((-1.0,) * n, (1.0,) * n, h)


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray
    kind: str = "derived"
    info: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.dims:
            if self.values.size != self.grid.size:
                raise GridMismatch(
                    f"values of shape {self.values.shape} do not fit grid dims {self.grid.dims}"
                )
            self.values = self.values.reshape(self.grid.dims)
        if self.kind not in FIELD_KINDS:
            raise BadParameter(f"unknown field kind {self.kind!r}")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteSample("field contains NaN or Inf")

    def like(self, values, kind=None) -> "ScalarField":
        return ScalarField(self.grid, values, kind or self.kind)

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


def sample(fn: Callable, grid: Grid, kind: str = "derived") -> ScalarField:
    """Evaluate ``fn`` at every node.

    ``fn`` receives one coordinate array per axis (numpy broadcasting); scalar
    return values are broadcast to the whole grid.
    """
    with np.errstate(all="ignore"):
        values = np.broadcast_to(np.asarray(fn(*grid.coords), dtype=float), grid.dims).copy()
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise NonFiniteSample(f"non-finite sample at node {tuple(bad)}, x={grid.coord(bad)}")
    return ScalarField(grid, values, kind)


def check_same_grid(*fields: ScalarField) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatch("fields live on different grids")
    return grid


# -- vectorized centered stencils on interior nodes ---------------------------

def _shift(a: np.ndarray, offsets) -> np.ndarray:
    """View of ``a`` at interior nodes shifted by ``offsets`` (each in {-1, 0, 1})."""
    idx = tuple(slice(1 + o, a.shape[k] - 1 + o if a.shape[k] - 1 + o != 0 else None)
                for k, o in enumerate(offsets))
    return a[idx]


def _unit(n, k, s=1):
    e = [0] * n
    e[k] = s
    return e


def central_gradient(values: np.ndarray, h: float) -> list[np.ndarray]:
    n = values.ndim
    return [(_shift(values, _unit(n, k)) - _shift(values, _unit(n, k, -1))) / (2 * h) for k in range(n)]


def central_hessian(values: np.ndarray, h: float) -> dict[tuple[int, int], np.ndarray]:
    """Upper-triangle Hessian entries ``{(j, k): D_jk u}`` on interior nodes."""
    n = values.ndim
    centre = _shift(values, [0] * n)
    out = {}
    for j in range(n):
        out[j, j] = (_shift(values, _unit(n, j)) - 2 * centre + _shift(values, _unit(n, j, -1))) / h**2
        for k in range(j + 1, n):
            pp = [0] * n
            pp[j], pp[k] = 1, 1
            pm = [0] * n
            pm[j], pm[k] = 1, -1
            mp = [0] * n
            mp[j], mp[k] = -1, 1
            mm = [0] * n
            mm[j], mm[k] = -1, -1
            out[j, k] = (_shift(values, pp) - _shift(values, pm) - _shift(values, mp) + _shift(values, mm)) / (4 * h**2)
    return out


def laplacian_interior(values: np.ndarray, h: float) -> np.ndarray:
    n = values.ndim
    centre = _shift(values, [0] * n)
    total = -2 * n * centre
    for k in range(n):
        total = total + _shift(values, _unit(n, k)) + _shift(values, _unit(n, k, -1))
    return total / h**2


# -- pointwise operations -----------------------------------------------------

def _check_interior(field: ScalarField, node) -> tuple[int, ...]:
    node = tuple(int(i) for i in np.atleast_1d(node))
    if not field.grid.is_interior(node):
        raise BoundaryNode(f"node {node} is not strictly interior")
    return node


def _local_patch(field: ScalarField, node) -> np.ndarray:
    sl = tuple(slice(i - 1, i + 2) for i in node)
    return field.values[sl]


def gradient_at(field: ScalarField, node) -> np.ndarray:
    node = _check_interior(field, node)
    patch = _local_patch(field, node)
    return np.array([g.item() for g in central_gradient(patch, field.grid.h)])


def hessian_at(field: ScalarField, node) -> np.ndarray:
    node = _check_interior(field, node)
    patch = _local_patch(field, node)
    n = field.grid.ndim
    entries = central_hessian(patch, field.grid.h)
    H = np.empty((n, n))
    for (j, k), val in entries.items():
        H[j, k] = H[k, j] = val.item()
    return H


def ball_mask(grid: Grid, center, radius: float) -> np.ndarray:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    dist2 = sum((c - x0) ** 2 for c, x0 in zip(grid.coords, center))
    # tolerance keeps lattice points exactly on the sphere inside the ball
    return dist2 <= radius**2 * (1 + 1e-12) + 1e-14


def sup_on_ball(field: ScalarField, center, radius: float) -> float:
    if radius <= 0:
        raise EmptyBall("radius must be positive")
    mask = ball_mask(field.grid, center, radius)
    if not mask.any():
        raise EmptyBall(f"no node within {radius} of {center}")
    return float(field.values[mask].max())


def default_clamp_tol(*fields: ScalarField) -> float:
    scale = max(max(float(np.abs(f.values).max()) for f in fields), 1.0)
    return 1e-6 * scale


def intrinsic_norm(u: ScalarField, v: ScalarField, clamp_tol: float | None = None) -> ScalarField:
    """Pointwise ``u_+^(1/2) + v_+^(1/3)``.

    Values in ``[-clamp_tol, 0)`` are treated as rounding noise and clamped to
    zero; anything more negative raises :class:`NegativityViolation`.
    """
    grid = check_same_grid(u, v)
    if clamp_tol is None:
        clamp_tol = default_clamp_tol(u, v)
    for name, f in (("u", u), ("v", v)):
        low = f.min()
        if low < -clamp_tol:
            raise NegativityViolation(
                f"{name} has minimum {low:.3e} below -{clamp_tol:.1e}; the pair is not nonnegative",
                min_value=low,
            )
    values = np.sqrt(np.maximum(u.values, 0.0)) + np.cbrt(np.maximum(v.values, 0.0))
    return ScalarField(grid, values, "derived")
