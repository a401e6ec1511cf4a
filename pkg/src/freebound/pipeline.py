"""Config-driven experiment runner: solve, verify, analyze and summarize."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis as an
from . import free_boundary as fbm
from .config import ExperimentConfig
from .coupled import CoupledParams, PenalizationSchedule, ProblemSpec, SolutionPair, solve_coupled
from .errors import FreeboundError, NegativityViolation, OracleFailure
from .exact import ExactPair, get_example, verify_example
from .grid import Grid, ScalarField, intrinsic_norm, make_grid, sample
from .io import write_csv, write_pgm, write_table

log = logging.getLogger(__name__)

EXPONENT_BANDS = {"u": 4.0 / 3.0, "v": 2.0, "intrinsic": 2.0 / 3.0}
EXPONENT_TOL = 0.15
DENSITY_FLOOR = 0.2
BLOWUP_RADII = (0.2, 0.1, 0.05)
MAX_BLOWUP_POINTS = 24


@dataclass
class Check:
    name: str
    status: str
    detail: str = ""

    def line(self) -> str:
        return f"CHECK {self.name}: {self.status}" + (f"  {self.detail}" if self.detail else "")


@dataclass
class RunResult:
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def add(self, name, status, detail=""):
        self.checks.append(Check(name, status, detail))

    @property
    def failed(self) -> bool:
        return any(c.status in ("FAIL", "UNEXPECTED-PASS", "ERROR") for c in self.checks)

    def summary(self) -> str:
        lines = [c.line() for c in self.checks] + [f"NOTE {n}" for n in self.notes]
        lines.append(f"RESULT {'FAIL' if self.failed else 'PASS'}")
        return "\n".join(lines) + "\n"


def _status(ok: bool, expected: bool | None = None) -> str:
    return fbm.verdict(ok, expected)


def build_grid(cfg: ExperimentConfig) -> Grid:
    return make_grid(cfg.grid.lo, cfg.grid.hi, cfg.grid.h)


def build_example(cfg: ExperimentConfig) -> ExactPair | None:
    p = cfg.problem
    if p.example is None:
        return None
    params = {}
    if p.example == "halfspace":
        eps = p.eps if p.eps is not None else 0.0
        params = {"alpha": p.alpha if p.alpha is not None else (0.0 if eps == 0 else 1.0), "eps": eps}
    elif p.example == "shifted-paraboloid":
        params = {"eps": p.eps}
    return get_example(p.example, **params)


def build_spec(cfg: ExperimentConfig, grid: Grid, g_override=None) -> ProblemSpec:
    example = build_example(cfg)
    p = cfg.problem
    if example is not None:
        f, g, phi, psi = example.f, example.g, example.u, example.v
    else:
        f, g, phi, psi = p.f, p.g, p.phi, p.psi
    if g_override is not None:
        g = g_override
    return ProblemSpec(grid, sample(f, grid, "source"), sample(g, grid, "source"), phi, psi, c0_check=p.c0)


def build_schedule(cfg: ExperimentConfig) -> PenalizationSchedule:
    s = cfg.schedule
    return PenalizationSchedule(eps=s.eps, per_eps_tol=s.per_eps_tol, fixed_point_max_iters=s.max_iterations)


def build_params(cfg: ExperimentConfig) -> CoupledParams:
    return CoupledParams(acceptance_tol=cfg.schedule.acceptance_tol)


def solve_from_config(cfg: ExperimentConfig, grid: Grid | None = None) -> SolutionPair:
    grid = grid or build_grid(cfg)
    return solve_coupled(build_spec(cfg, grid), build_schedule(cfg), build_params(cfg))


def _write_fields(out: Path, cfg: ExperimentConfig, named: dict, result: RunResult):
    out.mkdir(parents=True, exist_ok=True)
    for name, fld in named.items():
        if "csv" in cfg.output.formats:
            result.files.append(write_csv(fld, out / f"{name}.csv"))
        if "pgm" in cfg.output.formats:
            result.files.append(write_pgm(fld, out / f"{name}.pgm"))


def _diagnostics(pair: SolutionPair) -> str:
    lines = [pair.summary()]
    for rec in pair.history:
        lines.append(
            f"eps={rec['eps']:.6g} iteration={rec['iteration']} du={rec['du']:.6e} dv={rec['dv']:.6e}"
            + (f" eta={rec['eta']:.6e}" if "eta" in rec else "")
        )
    return "\n".join(lines) + "\n"


def run_verify(cfg: ExperimentConfig, result: RunResult, out: Path | None = None):
    example = build_example(cfg)
    if example is None:
        result.notes.append("no example named; oracle verification skipped")
        return
    grid = build_grid(cfg)
    t0 = time.perf_counter()
    try:
        report = verify_example(example, grid)
    except OracleFailure as exc:
        result.add("oracle residuals", "FAIL", str(exc))
        return
    elapsed = time.perf_counter() - t0
    orders_ok = all(o >= 1.5 for o in report.orders.values())
    result.add("oracle residuals", _status(orders_ok),
               "; ".join(report.lines()) + f"; {elapsed:.1f}s")
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        path = out / "oracle.txt"
        path.write_text("\n".join(report.lines()) + "\n", encoding="utf-8")
        result.files.append(path)


def run_solve(cfg: ExperimentConfig, result: RunResult, out: Path | None = None) -> SolutionPair | None:
    grid = build_grid(cfg)
    t0 = time.perf_counter()
    try:
        pair = solve_from_config(cfg, grid)
    except FreeboundError as exc:
        result.add("solve", "ERROR", f"{type(exc).__name__}: {exc}")
        return None
    elapsed = time.perf_counter() - t0
    res = ", ".join(f"{k}={v:.3e}" for k, v in pair.residuals.items())
    result.add("solve residuals", _status(pair.accepted), f"{res}; {elapsed:.1f}s")
    example = build_example(cfg)
    if example is not None:
        eu = float(np.abs(pair.u.values - sample(example.u, grid).values).max())
        ev = float(np.abs(pair.v.values - sample(example.v, grid).values).max())
        result.notes.append(f"distance to the closed-form pair: |u - u*| = {eu:.3e}, |v - v*| = {ev:.3e}")
    if out is not None:
        _write_fields(out, cfg, {"u": pair.u, "v": pair.v}, result)
        path = out / "diagnostics.txt"
        path.write_text(_diagnostics(pair), encoding="utf-8")
        result.files.append(path)
    return pair


def _points(cfg, example, inc) -> list:
    if cfg.analysis.points:
        return [tuple(p) for p in cfg.analysis.points]
    if example is not None:
        return [tuple(example.fb_point)]
    if not inc.fb_intrinsic.empty:
        c = inc.fb_intrinsic.centers
        return [tuple(c[len(c) // 2])]
    return []


def analyze_pair(cfg: ExperimentConfig, u: ScalarField, v: ScalarField, g: ScalarField, result: RunResult,
                 out: Path | None = None, label: str = "") -> None:
    """Every requested measurement on a pair, appended to ``result`` as checks."""
    grid = u.grid
    checks = cfg.analysis.checks
    example = build_example(cfg)
    expected = example.expected if example is not None else {}
    coupled = example.coupled if example is not None else bool(g.min() > 0)
    tau_u, tau_v = fbm.default_thresholds(grid, cfg.analysis.kappa)
    radii = tuple(cfg.analysis.radii) or an.dyadic_radii(grid.h)
    g_inf = cfg.analysis.g_inf if cfg.analysis.g_inf is not None else float(g.min())
    pre = f"{label}" if label else ""

    inc = fbm.check_inclusions(u, v, tau_u, tau_v)
    points = _points(cfg, example, inc)
    if "inclusions" in checks:
        for key, ok in inc.passes.items():
            detail = {"a": f"dist={inc.distance_a:g} cells", "b": f"count={inc.count_b}",
                      "c": f"dist={inc.distance_c:g} cells"}[key]
            result.add(f"{pre}inclusion ({key})", _status(ok, expected.get(key)), detail)
        if inc.fb_intrinsic.empty:
            result.notes.append(f"{pre}coupled free boundary is empty")
        if inc.fb_u.empty:
            result.notes.append(f"{pre}FB(u) is empty at tau_u={tau_u:.3g}; inclusions (a) and (c) hold vacuously")

    try:
        norm = intrinsic_norm(u, v)
    except NegativityViolation as exc:
        ok_neg = example is not None and not example.nonnegative
        result.add(f"{pre}nonnegativity", "EXPECTED-FAIL" if ok_neg else "FAIL", f"NegativityViolation: {exc}")
        norm = None

    rows = []
    if "exponents" in checks and norm is not None:
        for pt in points:
            for name, fld in (("u", u), ("v", v), ("intrinsic", norm)):
                try:
                    fit = an.growth_exponent(fld, pt, radii)
                except FreeboundError as exc:
                    result.add(f"{pre}slope {name} at {pt}", "FAIL" if coupled else "INFO", str(exc))
                    continue
                ok = abs(fit.slope - EXPONENT_BANDS[name]) <= EXPONENT_TOL
                result.add(f"{pre}slope {name} at {pt}", _status(ok) if coupled else "INFO",
                           f"slope={fit.slope:.4f} target={EXPONENT_BANDS[name]:.4f}")
                rows += [(name, *map(float, pt), float(r), float(s)) for r, s in zip(fit.radii, fit.sups)]
    if "nondegeneracy" in checks and norm is not None:
        for pt in points:
            try:
                nd = an.nondegeneracy_profile(u, v, pt, radii, g_inf)
                result.add(f"{pre}nondegeneracy at {pt}", _status(nd.passed) if coupled else "INFO",
                           f"min ratio={nd.min_ratio:.4f} threshold={nd.threshold:.4f}")
            except FreeboundError as exc:
                result.add(f"{pre}nondegeneracy at {pt}", "FAIL" if coupled else "INFO", str(exc))
    if "density" in checks:
        for pt in points:
            dens = an.density_profile(u, v, pt, radii, tau_u, tau_v)
            result.add(f"{pre}density at {pt}", _status(dens.min() >= DENSITY_FLOOR) if coupled else "INFO",
                       f"min fraction={dens.min():.4f}")
            rows += [("density", *map(float, pt), float(r), float(d)) for r, d in zip(radii, dens)]
    if "porosity" in checks:
        for name, fb in (("u", inc.fb_u), ("v", inc.fb_v), ("intrinsic", inc.fb_intrinsic)):
            if fb.empty:
                continue
            delta = an.porosity_estimate(fb, (16 * grid.h, 32 * grid.h))
            result.add(f"{pre}porosity FB({name})", _status(delta > 0), f"delta={delta:.4f}")
    if "boxdim" in checks:
        for name, fb in (("u", inc.fb_u), ("v", inc.fb_v)):
            if not fb.empty:
                dim = an.box_dimension(fb)
                result.add(f"{pre}box dimension FB({name})", "INFO", f"slope={dim.slope:.4f}")
    if "blowup" in checks and grid.ndim == 2:
        b_radii = tuple(r for r in BLOWUP_RADII if r >= 4 * grid.h)
        unc = fbm.uncoupled_set(u, v, tau_u, tau_v)
        centers = unc.centers
        if len(centers):
            pick = np.unique(np.linspace(0, len(centers) - 1, min(MAX_BLOWUP_POINTS, len(centers))).round().astype(int))
            singular = 0
            for c in centers[pick]:
                try:
                    cl = fbm.classify_blowup(v, c, b_radii, tau_v)
                except FreeboundError:
                    continue
                singular += cl.verdict == "Singular"
                rows.append(("blowup", float(c[0]), float(c[1]), float(cl.trace), float(cl.singular_residual)))
            result.add(f"{pre}uncoupled points singular", _status(singular == len(pick)),
                       f"{singular}/{len(pick)} sampled points")
        for pt in cfg.analysis.points:
            try:
                cl = fbm.classify_blowup(v, pt, b_radii, tau_v)
                result.add(f"{pre}blow-up at {tuple(pt)}", "INFO", cl.line())
            except FreeboundError as exc:
                result.add(f"{pre}blow-up at {tuple(pt)}", "INFO", f"{type(exc).__name__}: {exc}")
    if out is not None and rows:
        out.mkdir(parents=True, exist_ok=True)
        result.files.append(write_table(out / f"{label.strip(': ') or 'analysis'}_profiles.csv",
                                        ["quantity", "x", "y", "radius", "value"], rows))


def run(cfg: ExperimentConfig, out: Path | str | None = None, mode: str = "report", notes=()) -> RunResult:
    """Run a pipeline stage: ``solve``, ``verify-example``, ``analyze`` or ``report`` (all of them).

    ``notes`` are copied into the summary.
    """
    out = Path(out) if out is not None else Path(cfg.output.directory)
    result = RunResult(notes=list(notes))
    grid = build_grid(cfg)
    example = build_example(cfg)
    if mode in ("verify-example", "report"):
        run_verify(cfg, result, out)
    pair = None
    if mode == "solve" or (mode in ("analyze", "report") and cfg.analysis.solve):
        pair = run_solve(cfg, result, out)
    if mode in ("analyze", "report"):
        spec_g = sample(example.g if example is not None else cfg.problem.g, grid, "source")
        if example is not None:
            u0, v0, _, _ = example.fields(grid)
            analyze_pair(cfg, u0, v0, spec_g, result, out, label="oracle: ")
        if pair is not None:
            analyze_pair(cfg, pair.u, pair.v, spec_g, result, out, label="solver: ")
        if "comparison" in cfg.analysis.checks and cfg.analysis.g2 is not None:
            spec1 = build_spec(cfg, grid)
            spec2 = build_spec(cfg, grid, g_override=cfg.analysis.g2)
            try:
                rep = an.comparison_experiment(spec1, spec2, build_schedule(cfg), build_params(cfg))
                result.add("comparison", _status(rep.passed),
                           f"min(v1 - v2)={rep.min_difference:.3e} tol={rep.tolerance:.1e}")
            except FreeboundError as exc:
                result.add("comparison", "ERROR", f"{type(exc).__name__}: {exc}")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "summary.txt"
    path.write_text(result.summary(), encoding="utf-8")
    result.files.append(path)
    return result
