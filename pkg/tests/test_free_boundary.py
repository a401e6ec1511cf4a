import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freebound.errors import BadParameter, PointTooDeep, RadiiUnresolvable
from freebound.exact import example_halfspace, example_radial, example_uncoupled
from freebound.free_boundary import (
    FreeBoundaryCells,
    NodeSet,
    check_inclusions,
    classify_blowup,
    coupled_fb,
    default_thresholds,
    extract_fb,
    free_boundary_report,
    hausdorff_distance,
    one_sided_distance,
    positivity_set,
    snap_to_zero_set,
    uncoupled_set,
    unit_ball_stencil,
    verdict,
)
from freebound.grid import make_grid, sample, unit_box

RADII = (0.2, 0.1, 0.05)


def half_square(x, y):
    return 0.5 * np.maximum(x, 0) ** 2


def test_thresholds():
    g = unit_box(2, 1 / 64)
    tu, tv = default_thresholds(g)
    assert tu == pytest.approx(0.5 * (1 / 64) ** (4 / 3))
    assert tv == pytest.approx(0.5 / 64**2)


def test_positivity_set_examples():
    g = unit_box(2, 1 / 16)
    s = positivity_set(sample(half_square, g), g.h**2 / 4)
    x, _ = g.coords
    assert np.array_equal(s.mask, x > g.h / np.sqrt(2))
    assert positivity_set(sample(lambda x, y: 0 * x, g), 1e-12).count == 0
    assert positivity_set(sample(lambda x, y: 1 + 0 * x, g), 0.5).count == g.dims[0] * g.dims[1]
    with pytest.raises(BadParameter):
        positivity_set(sample(half_square, g), -1.0)


@given(st.floats(0, 0.5), st.floats(0, 0.5))
def test_positivity_monotone_in_threshold(t1, t2):
    g = unit_box(2, 1 / 8)
    f = sample(lambda x, y: np.sin(2 * x) * np.cos(y) + 0.2, g)
    lo, hi = sorted((t1, t2))
    assert not np.any(positivity_set(f, hi).mask & ~positivity_set(f, lo).mask)


def test_extract_fb_halfspace_column():
    g = unit_box(2, 1 / 8)
    x, _ = g.coords
    fb = extract_fb(NodeSet(g, x > 0))
    cols = set(fb.indices[:, 0])
    assert cols == {g.nearest_node((0.0, 0.0))[0]}
    assert fb.count == g.dims[1] - 1
    assert np.allclose(fb.centers[:, 0], g.h / 2)


def test_extract_fb_full_and_empty():
    g = unit_box(2, 1 / 8)
    assert extract_fb(NodeSet(g, np.ones(g.dims, bool))).empty
    assert extract_fb(NodeSet(g, np.zeros(g.dims, bool))).empty


def test_extract_fb_single_node_ring():
    g = unit_box(2, 1 / 8)
    m = np.zeros(g.dims, bool)
    m[4, 5] = True
    fb = extract_fb(NodeSet(g, m))
    assert fb.count == 4
    assert {tuple(i) for i in fb.indices} == {(3, 4), (3, 5), (4, 4), (4, 5)}


def test_extract_fb_1d():
    g = make_grid((-1,), (1,), 0.25)
    fb = extract_fb(NodeSet(g, g.axes[0] > 0))
    assert fb.count == 1


def test_distances():
    g = unit_box(2, 1 / 8)
    x, _ = g.coords
    a = extract_fb(NodeSet(g, x > 0))
    b = extract_fb(NodeSet(g, x > 0.25))
    assert one_sided_distance(a, b) == pytest.approx(2.0)
    assert hausdorff_distance(a, b) == pytest.approx(2.0)
    empty = FreeBoundaryCells(g, np.zeros_like(a.cells))
    assert one_sided_distance(empty, a) == 0.0
    assert one_sided_distance(a, empty) == np.inf
    assert coupled_fb(a, b).empty
    assert coupled_fb(a, a).count == a.count


def test_verdict_labels():
    assert verdict(True) == "PASS" and verdict(False) == "FAIL"
    assert verdict(False, False) == "EXPECTED-FAIL"
    assert verdict(True, False) == "UNEXPECTED-PASS"


def test_inclusions_radial_pair():
    g = unit_box(2, 1 / 64)
    u, v, *_ = example_radial().fields(g)
    rep = check_inclusions(u, v)
    assert all(rep.passes.values())
    center = g.nearest_node((0.0, 0.0))
    for fb in (rep.fb_u, rep.fb_v, rep.fb_intrinsic):
        assert not fb.empty
        # the thresholds cut out the 3x3 block of nodes around the origin
        assert np.all(np.abs(fb.indices - np.array(center) + 0.5) <= 2.5)
    assert uncoupled_set(u, v).empty


def test_inclusions_uncoupled_pair():
    g = unit_box(2, 1 / 64)
    ex = example_uncoupled()
    u, v, *_ = ex.fields(g)
    rep = check_inclusions(u, v)
    assert all(rep.passes.values())
    unc = uncoupled_set(u, v)
    centers = unc.centers
    assert np.all(np.abs(centers[:, 1]) < 2 * g.h)
    assert np.abs(centers[:, 0]).min() > g.h
    assert unc.count >= 100


def test_inclusions_halfspace_sharpness():
    g = unit_box(2, 1 / 64)
    ex = example_halfspace(1.0, 0.25)
    u, v, *_ = ex.fields(g)
    rep = check_inclusions(u, v)
    assert rep.fb_intrinsic.empty
    assert not rep.passes["c"]
    assert rep.passes["b"]
    lines = rep.lines(ex.expected)
    assert any("(c)" in ln and "EXPECTED-FAIL" in ln for ln in lines)
    assert uncoupled_set(u, v).count > 0


def test_inclusions_coupled_halfspace():
    g = unit_box(2, 1 / 64)
    u, v, *_ = example_halfspace(0.0, 0.0).fields(g)
    rep = check_inclusions(u, v)
    assert all(rep.passes.values())
    assert uncoupled_set(u, v).empty


def test_stencil_in_unit_disk():
    s = unit_ball_stencil()
    assert np.all((s**2).sum(axis=1) <= 1 + 1e-12)
    assert len(s) > 200


def test_blowup_regular():
    g = unit_box(2, 1 / 128)
    c = classify_blowup(sample(half_square, g), (0.0, 0.3), RADII)
    assert c.verdict == "Regular" and not c.degenerate
    assert np.linalg.norm(c.direction - [1, 0]) <= 0.05
    assert "Regular" in c.line()


def test_blowup_singular_line():
    g = unit_box(2, 1 / 128)
    c = classify_blowup(sample(lambda x, y: 0.5 * y * y, g), (0.5, 0.0), RADII)
    assert c.verdict == "Singular"
    assert np.abs(c.matrix - np.diag([0, 1])).max() <= 0.05
    assert abs(c.trace - 1) <= 0.05


def test_blowup_singular_paraboloid():
    g = unit_box(2, 1 / 128)
    c = classify_blowup(sample(lambda x, y: 0.25 * (x * x + y * y), g), (0.0, 0.0), RADII)
    assert c.verdict == "Singular"
    assert np.abs(c.matrix - 0.5 * np.eye(2)).max() <= 0.05


@pytest.mark.parametrize("point, field", [((0.0, 0.3), half_square), ((0.5, 0.0), lambda x, y: 0.5 * y * y)])
def test_blowup_scale_consistent(point, field):
    g = unit_box(2, 1 / 128)
    v = sample(field, g)
    a = classify_blowup(v, point, RADII)
    b = classify_blowup(v, point, tuple(r / 2 for r in RADII[:-1]) + (4 * g.h,))
    assert a.verdict == b.verdict


def test_blowup_errors():
    g = unit_box(2, 1 / 64)
    v = sample(half_square, g)
    with pytest.raises(RadiiUnresolvable):
        classify_blowup(v, (0.0, 0.0), (0.1, 2 * g.h))
    with pytest.raises(PointTooDeep):
        classify_blowup(v, (0.9, 0.0), (0.2, 0.1))
    g1 = make_grid((-1,), (1,), 1 / 16)
    with pytest.raises(BadParameter):
        classify_blowup(sample(lambda x: x * x, g1), (0.0,), (0.5,))


def test_free_boundary_report_classifies_points():
    g = unit_box(2, 1 / 64)
    u, v, *_ = example_uncoupled().fields(g)
    rep = free_boundary_report(u, v, points=[(0.5, 0.0), (-0.5, 0.0)], radii=(0.2, 0.1))
    assert [c.verdict for c in rep.classifications] == ["Singular", "Singular"]
    assert rep.uncoupled.count > 0


def test_snap_moves_cell_center_onto_zero_set():
    g = unit_box(2, 1 / 64)
    v = sample(lambda x, y: 0.5 * y * y, g)
    assert np.allclose(snap_to_zero_set(v, (0.3125, 1.5 * g.h)), (0.3125, 0.0))
    assert np.allclose(snap_to_zero_set(v, (0.5, 0.0)), (0.5, 0.0))


def test_blowup_at_uncoupled_cells():
    g = unit_box(2, 1 / 128)
    u, v, *_ = example_uncoupled().fields(g)
    centers = uncoupled_set(u, v).centers
    for p in centers[:: len(centers) // 8]:
        c = classify_blowup(v, p, RADII)
        assert c.verdict == "Singular"
        assert np.abs(c.matrix - np.diag([0, 1])).max() <= 0.05
    assert c.extras["given_point"] == tuple(p)
