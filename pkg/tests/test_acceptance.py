"""Acceptance criteria 1-9.

Each test records one PASS/FAIL line, printed in the "acceptance criteria"
section of the pytest terminal summary, and then asserts the same verdict.
"""
import time
import warnings

import numpy as np
import pytest
from conftest import record_acceptance

from freebound.analysis import (
    box_dimension,
    comparison_experiment,
    density_profile,
    dyadic_radii,
    growth_exponent,
    nondegeneracy_profile,
    nondegeneracy_threshold,
    porosity_estimate,
)
from freebound.config import parse_config
from freebound.coupled import PenalizationSchedule, ProblemSpec, solve_coupled
from freebound.errors import NegativityViolation, NonConvergence
from freebound.exact import (
    example_halfspace,
    example_radial,
    example_shifted_paraboloid,
    example_uncoupled,
    verify_example,
)
from freebound.free_boundary import (
    check_inclusions,
    classify_blowup,
    default_thresholds,
    extract_fb,
    positivity_set,
    uncoupled_set,
)
from freebound.grid import intrinsic_norm, sample, unit_box
from freebound.pipeline import run

H = 1 / 128
TOL = 5e-2
SLOPE_TOL = 0.15
TARGETS = {"u": 4 / 3, "v": 2.0, "intrinsic": 2 / 3}
ORIGIN = (0.0, 0.0)
BLOWUP_RADII = (0.2, 0.1, 0.05)


def coupled_oracles():
    return {"radial": example_radial(), "halfspace": example_halfspace(0.0, 0.0), "uncoupled": example_uncoupled()}


@pytest.fixture(scope="module")
def grid():
    return unit_box(2, H)


@pytest.fixture(scope="module")
def solved(grid):
    """Criterion-2 solves, shared with criteria 3, 4 and 8."""
    out = {}
    for name in ("radial", "uncoupled"):
        ex = coupled_oracles()[name]
        u, v, f, g = ex.fields(grid)
        spec = ProblemSpec(grid, f, g, u, v)
        t0 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergence)
            pair = solve_coupled(spec, PenalizationSchedule(eps=(1e-1, 1e-2, 1e-3)))
        out[name] = {
            "pair": pair,
            "time": time.perf_counter() - t0,
            "err_u": float(np.abs(pair.u.values - u.values).max()),
            "err_v": float(np.abs(pair.v.values - v.values).max()),
        }
    return out


def test_criterion_1_oracle_residuals():
    parts, ok = [], True
    for ex in (example_radial(), example_uncoupled(), example_halfspace(1.0, 0.25)):
        t0 = time.perf_counter()
        rep = verify_example(ex, unit_box(2, 1 / 64), raise_on_failure=False)
        dt = time.perf_counter() - t0
        good = all(o >= 1.5 for o in rep.orders.values()) and dt <= 60
        ok &= good
        parts.append(f"{ex.name}: order u={rep.orders['u']:.2f} v={rep.orders['v']:.2f} {dt:.1f}s")
    record_acceptance(1, ok, "; ".join(parts))
    assert ok


def test_criterion_2_solver_recovery(solved):
    parts, ok = [], True
    for name, s in solved.items():
        good = s["err_u"] <= TOL and s["err_v"] <= TOL and s["time"] <= 300
        ok &= good
        parts.append(f"{name}: |u-u*|={s['err_u']:.3e} |v-v*|={s['err_v']:.3e} {s['time']:.0f}s "
                     f"accepted={s['pair'].accepted}")
    record_acceptance(2, ok, "; ".join(parts))
    assert ok


def _inclusion_text(rep):
    return f"a={rep.distance_a:g} b={rep.count_b} c={rep.distance_c:g}"


def test_criterion_3_inclusions(grid, solved):
    parts, ok = [], True
    for name, s in solved.items():
        rep = check_inclusions(s["pair"].u, s["pair"].v)
        good = all(rep.passes.values())
        ok &= good
        empty = " FB(u) empty" if rep.fb_u.empty else ""
        parts.append(f"solver {name}: {_inclusion_text(rep)}{empty}")
    for name, ex in coupled_oracles().items():
        u, v, *_ = ex.fields(grid)
        rep = check_inclusions(u, v)
        good = all(rep.passes.values())
        ok &= good
        parts.append(f"oracle {name}: {_inclusion_text(rep)}")
    record_acceptance(3, ok, "; ".join(parts))
    assert ok


def _exponent_row(u, v, radii, g_inf=1.0):
    norm = intrinsic_norm(u, v)
    slopes = {k: growth_exponent(f, ORIGIN, radii).slope for k, f in (("u", u), ("v", v), ("intrinsic", norm))}
    nd = nondegeneracy_profile(u, v, ORIGIN, radii, g_inf)
    good = all(abs(slopes[k] - TARGETS[k]) <= SLOPE_TOL for k in TARGETS) and nd.passed
    text = " ".join(f"{k}={s:.3f}" for k, s in slopes.items()) + f" nd_min={nd.min_ratio:.3f}"
    return good, text


def test_criterion_4_exponents(grid, solved):
    radii = dyadic_radii(grid.h)
    parts, ok = [], True
    for name, ex in coupled_oracles().items():
        u, v, *_ = ex.fields(grid)
        good, text = _exponent_row(u, v, radii)
        ok &= good
        parts.append(f"oracle {name}: {text}")
    for name, s in solved.items():
        good, text = _exponent_row(s["pair"].u, s["pair"].v, radii)
        ok &= good
        parts.append(f"solver {name}: {text}")
    detail = f"radii {radii[-1]:.4g}..{radii[0]:.4g}, threshold {nondegeneracy_threshold(1.0):.3f}; " + "; ".join(parts)
    record_acceptance(4, ok, detail)
    assert ok


def test_criterion_5_blowups(grid):
    ok = True
    u, v, *_ = example_halfspace(0.0, 0.0).fields(grid)
    fb = extract_fb(positivity_set(v, default_thresholds(grid)[1]))
    centers = fb.centers[np.abs(fb.centers[:, 1]) <= 0.75]
    reg_pts = centers[np.linspace(0, len(centers) - 1, 20).round().astype(int)]
    worst_e = 0.0
    for p in reg_pts:
        c = classify_blowup(v, p, BLOWUP_RADII)
        ok &= c.verdict == "Regular"
        if c.verdict == "Regular":
            worst_e = max(worst_e, float(np.linalg.norm(c.direction - [1.0, 0.0])))
    ok &= worst_e <= 0.05

    u, v, *_ = example_uncoupled().fields(grid)
    unc = uncoupled_set(u, v).centers
    sing_pts = unc[np.linspace(0, len(unc) - 1, 24).round().astype(int)]
    worst_a = worst_tr = 0.0
    n_sing = 0
    for p in sing_pts:
        c = classify_blowup(v, p, BLOWUP_RADII)
        n_sing += c.verdict == "Singular"
        worst_a = max(worst_a, float(np.linalg.norm(c.matrix - np.diag([0.0, 1.0]), 2)))
        worst_tr = max(worst_tr, abs(c.trace - 1))
    ok &= n_sing == len(sing_pts) >= 20 and worst_a <= 0.05 and worst_tr <= 0.05
    record_acceptance(5, ok, f"half-space {len(reg_pts)} points Regular, max|e-(1,0)|={worst_e:.2e}; "
                             f"uncoupled {n_sing}/{len(sing_pts)} Singular, max||A-diag(0,1)||={worst_a:.2e}, "
                             f"max|trA-1|={worst_tr:.2e}")
    assert ok


def _halfspace_report(tmp_path, eps):
    cfg = parse_config(f"[grid]\nh = 1/128\n[problem]\nexample = halfspace\neps = {eps}\n"
                       "[analysis]\nsolve = false\nchecks = inclusions\n")
    return run(cfg, tmp_path / f"eps{eps}", mode="analyze")


def test_criterion_6_sharpness(tmp_path):
    sharp = _halfspace_report(tmp_path, 0.25)
    coupled = _halfspace_report(tmp_path, 0)
    c_sharp = next(c for c in sharp.checks if c.name.endswith("inclusion (c)"))
    c_coupled = next(c for c in coupled.checks if c.name.endswith("inclusion (c)"))
    empty = any("coupled free boundary is empty" in n for n in sharp.notes)
    ok = c_sharp.status == "EXPECTED-FAIL" and empty and c_coupled.status == "PASS" and not coupled.failed
    record_acceptance(6, ok, f"eps=0.25: (c) {c_sharp.status}, intrinsic FB empty={empty}; "
                             f"eps=0: (c) {c_coupled.status}, run {'FAIL' if coupled.failed else 'PASS'}")
    assert ok


def test_criterion_7_comparison():
    grid = unit_box(2, 1 / 64)
    ex = example_radial()
    u, v, f, g1 = ex.fields(grid)
    g2 = sample(lambda x, y: 1.2 + 0 * x, grid)
    spec1 = ProblemSpec(grid, f, g1, u, v)
    spec2 = ProblemSpec(grid, f, g2, u, v)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        rep = comparison_experiment(spec1, spec2)
    ok = rep.passed
    record_acceptance(7, ok, f"h=1/64 min(v1-v2)={rep.min_difference:.3e} >= -{rep.tolerance:.1e}")
    assert ok


def test_criterion_8_measure_proxies(grid, solved):
    ok = True
    parts = []
    tau_v = default_thresholds(grid)[1]
    for name in ("halfspace", "uncoupled"):
        _, v, *_ = coupled_oracles()[name].fields(grid)
        dim = box_dimension(extract_fb(positivity_set(v, tau_v))).slope
        ok &= abs(dim - 1.0) <= 0.1
        parts.append(f"boxdim FB(v) {name}={dim:.3f}")
    radii = dyadic_radii(grid.h)
    dens = []
    for name, ex in coupled_oracles().items():
        u, v, *_ = ex.fields(grid)
        dens.append((f"oracle {name}", density_profile(u, v, ORIGIN, radii).min()))
    for name, s in solved.items():
        dens.append((f"solver {name}", density_profile(s["pair"].u, s["pair"].v, ORIGIN, radii).min()))
    ok &= all(d >= 0.2 for _, d in dens)
    parts.append("density min " + ", ".join(f"{n}={d:.3f}" for n, d in dens))
    poro = []
    for name, s in solved.items():
        if not s["pair"].accepted:
            parts.append(f"solver {name} not accepted, porosity skipped")
            continue
        rep = check_inclusions(s["pair"].u, s["pair"].v)
        for label, fb in (("u", rep.fb_u), ("v", rep.fb_v), ("intrinsic", rep.fb_intrinsic)):
            if not fb.empty:
                poro.append((f"{name} FB({label})", porosity_estimate(fb, (16 * grid.h, 32 * grid.h))))
    ok &= bool(poro) and all(p > 0 for _, p in poro)
    parts.append("porosity " + ", ".join(f"{n}={p:.3f}" for n, p in poro))
    record_acceptance(8, ok, "; ".join(parts))
    assert ok


def test_criterion_9_negativity(grid):
    eps = 0.1
    u, v, *_ = example_shifted_paraboloid(eps).fields(grid)
    try:
        intrinsic_norm(u, v)
        raised = False
    except NegativityViolation:
        raised = True
    x, y = grid.coords
    r = np.hypot(x, y)
    mismatch = (v.values < 0) != (r < 2 * eps)
    within = bool(np.all(np.abs(r[mismatch] - 2 * eps) <= grid.h))

    # solver analogue: the same boundary data, nonnegativity is not enforced
    g64 = unit_box(2, 1 / 64)
    su, sv, f, g = example_shifted_paraboloid(eps).fields(g64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergence)
        pair = solve_coupled(ProblemSpec(g64, f, g, su, sv), PenalizationSchedule())
    xs, ys = g64.coords
    rs = np.hypot(xs, ys)
    neg = pair.v.values < 0
    disk = bool(np.all(np.abs(rs[neg != (rs < 2 * eps)] - 2 * eps) <= g64.h))
    ok = raised and within and disk and pair.v.values.min() < 0
    record_acceptance(9, ok, f"NegativityViolation={raised}, oracle region matches r<2eps within one cell={within} "
                             f"({int(mismatch.sum())} boundary nodes differ); solver min v={pair.v.values.min():.3e}, "
                             f"negative disk={disk}")
    assert ok
