import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscihomog.errors import NotInteriorError, ValidationError
from oscihomog.geometry import BOUNDARY, INSIDE, OUTSIDE, ConvexDomain, parse_domain

UNIT = ConvexDomain.circle(1.0)
ELL = ConvexDomain.ellipse(2.0, 1.0)
# slightly perturbed circle, still uniformly convex
BLOB = ConvexDomain.radial([1.0, 0.0, 0.04, 0.01], [0.0, 0.0, 0.0, 0.02])


def ellipse_curvature(a, b, t):
    return a * b / (a**2 * np.sin(t) ** 2 + b**2 * np.cos(t) ** 2) ** 1.5


def fd_curvature(dom, t, h=1e-4):
    p = [dom.point(t + k * h) for k in (-1, 0, 1)]
    d1 = (p[2] - p[0]) / (2 * h)
    d2 = (p[2] - 2 * p[1] + p[0]) / h**2
    return (d1[0] * d2[1] - d1[1] * d2[0]) / np.linalg.norm(d1) ** 3


# -- curvature ----------------------------------------------------------------

@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_circle_curvature(r):
    t = np.linspace(0, 2 * np.pi, 11)
    assert np.allclose(ConvexDomain.circle(r).curvature(t), 1 / r, rtol=1e-14)


def test_ellipse_curvature_at_major_vertex():
    assert ELL.curvature(0.0) == pytest.approx(2.0, rel=1e-14)
    assert fd_curvature(ELL, 0.0) == pytest.approx(2.0, rel=1e-6)


@pytest.mark.parametrize("t", np.linspace(0.1, 6.0, 7))
def test_curvature_matches_oracles(t):
    assert ELL.curvature(t) == pytest.approx(ellipse_curvature(2, 1, t), rel=1e-12)
    assert BLOB.curvature(t) == pytest.approx(fd_curvature(BLOB, t), rel=1e-6)


def test_domain_invariants():
    for dom in (UNIT, ELL, BLOB):
        cert = dom.certify()
        assert cert["min_curvature"] > 0
        assert cert["winding_number"] == pytest.approx(1.0, abs=1e-10)
        assert cert["closure_gap"] < 1e-12
        assert cert["normal_length_error"] < 1e-12


def test_perimeter_and_min_curvature():
    assert UNIT.perimeter == pytest.approx(2 * math.pi, rel=1e-14)
    # Ramanujan's second approximation is accurate to ~1e-10 relative here
    h = ((2 - 1) / (2 + 1)) ** 2
    ram = math.pi * 3 * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))
    assert ELL.perimeter == pytest.approx(ram, rel=1e-9)
    assert ELL.min_curvature == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize(
    "make",
    [
        lambda: ConvexDomain.circle(-1.0),
        lambda: ConvexDomain.ellipse(1.0, -2.0),
        lambda: ConvexDomain.radial([1.0, 0.0, 0.3]),  # r = 1 + 0.3 cos 2t has flat/concave parts
    ],
)
def test_invalid_domains_rejected(make):
    with pytest.raises(ValidationError, match="curvature bound not positive"):
        make()


def test_normals_point_outward():
    t = np.linspace(0, 2 * np.pi, 50, endpoint=False)
    for dom in (ELL, BLOB):
        outer = dom.point(t) + 1e-3 * dom.normal(t)
        assert all(lab == OUTSIDE for lab in dom.contains(outer))


# -- contains -----------------------------------------------------------------

@pytest.mark.parametrize("x, label", [((0, 0), INSIDE), ((1, 0), BOUNDARY), ((2, 0), OUTSIDE)])
def test_contains_unit_circle(x, label):
    assert UNIT.contains(x) == label


def test_contains_band():
    assert ELL.contains((2 - 1e-13, 0.0)) == BOUNDARY
    assert ELL.contains((2 - 1e-9, 0.0)) == INSIDE


# -- distance -----------------------------------------------------------------

def test_distance_unit_circle():
    d, t = UNIT.distance_to_boundary(np.array([0.5, 0.0]))
    assert d == pytest.approx(0.5)
    assert np.allclose(UNIT.point(t), [1.0, 0.0])


def test_distance_centre_tie_break():
    d, t = UNIT.distance_to_boundary(np.array([0.0, 0.0]))
    assert d == 1.0 and t == 0.0


def test_distance_ellipse_against_dense_grid():
    x = np.array([0.0, 0.25])
    d, _ = ELL.distance_to_boundary(x)
    tg = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    grid_min = np.min(np.linalg.norm(ELL.point(tg) - x, axis=1))
    assert d == pytest.approx(0.75, abs=1e-12)
    assert abs(d - grid_min) < 1e-9


@pytest.mark.parametrize("x", [(1.0, 0.0), (3.0, 0.0)])
def test_distance_rejects_non_interior(x):
    with pytest.raises(NotInteriorError):
        UNIT.distance_to_boundary(np.array(x))


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.05, 0.95), th=st.floats(0, 2 * math.pi))
def test_projection_consistency(r, th):
    for dom in (ELL, BLOB):
        x = r * dom.boundary_radius(th) * np.array([math.cos(th), math.sin(th)])
        d, t = dom.distance_to_boundary(x)
        foot = dom.point(t)
        assert np.linalg.norm(x - foot) == pytest.approx(d, abs=1e-12)
        n = dom.normal(t)
        v = foot - x
        assert abs(v[0] * n[1] - v[1] * n[0]) < 1e-9


def test_offset_points_are_at_requested_distance():
    pts = ELL.offset_points(0.2, 32)
    d = [ELL.distance_to_boundary(p)[0] for p in pts]
    assert np.allclose(d, 0.2, atol=1e-11)
    with pytest.raises(ValidationError):
        ELL.offset_points(0.6, 8)  # beyond the minimal radius of curvature 1/2


def test_inradius():
    assert ELL.inradius == 1.0
    # coarse grid search over interior points as the oracle
    g = np.linspace(-0.3, 0.3, 31)
    pts = np.stack(np.meshgrid(g, g), axis=-1).reshape(-1, 2)
    best = max(BLOB.closest_point(p)[0] for p in pts)
    assert best - 1e-9 <= BLOB.inradius <= best + 0.01


# -- local graphs -------------------------------------------------------------

def test_circle_chart_closed_form():
    lg = UNIT.local_graph(0.0, 0.3)
    z = np.linspace(-0.3, 0.3, 61)
    assert np.max(np.abs(lg.psi(z) - (1 - np.sqrt(1 - z**2)))) < 1e-10
    assert lg.d2psi(0.0) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("dom", [UNIT, ELL, BLOB])
def test_chart_psi_zero_at_base(dom):
    assert dom.local_graph(1.1, 0.2).psi(0.0) == 0.0


def test_ellipse_chart_second_derivative():
    lg = ELL.local_graph(np.pi / 2, 0.3)
    assert lg.d2psi(0.0) == pytest.approx(0.25, rel=1e-10)

    def second(h):
        return (lg.psi(h) - 2 * lg.psi(0.0) + lg.psi(-h)) / h**2

    fd = (4 * second(1e-3) - second(2e-3)) / 3  # Richardson-extrapolated
    assert fd == pytest.approx(ELL.curvature(np.pi / 2), abs=1e-8)


@pytest.mark.parametrize("t0", [0.0, 0.7, 2.5])
def test_chart_trace_lies_on_boundary(t0):
    lg = BLOB.local_graph(t0, 0.3)
    z = np.random.default_rng(4).uniform(-0.3, 0.3, 100)
    pts = lg.trace(z)
    # points on the curve are classified as boundary (gap < 1e-12 along rays)
    gap = np.hypot(pts[:, 0], pts[:, 1]) - BLOB.boundary_radius(np.arctan2(pts[:, 1], pts[:, 0]))
    assert np.max(np.abs(gap)) < 1e-10


def test_chart_curvature_bound_on_chart():
    lg = ELL.local_graph(0.4, 0.3)
    assert np.min(np.abs(lg.d2psi(np.linspace(-0.3, 0.3, 41)))) > 0


def test_tilted_chart_slope():
    lg = UNIT.local_graph(0.0, 0.2, tilt=0.3)
    assert lg.psi_grad0 == pytest.approx(-math.tan(0.3), rel=1e-10)


def test_chart_too_wide():
    with pytest.raises(ValidationError, match="chart too wide"):
        UNIT.local_graph(0.0, 1.5)


# -- parsing ------------------------------------------------------------------

def test_parse_domain(tmp_path):
    assert parse_domain("circle:2").params == (2.0,)
    assert parse_domain("ellipse:2,1").params == (2.0, 1.0)
    prof = tmp_path / "r.json"
    prof.write_text(json.dumps({"cos": [1.0, 0.0, 0.04], "sin": [0.0, 0.0, 0.01]}))
    dom = parse_domain(f"radial:{prof}")
    assert dom.kind == "radial" and dom.min_curvature > 0
    with pytest.raises(ValidationError, match="curvature bound not positive"):
        parse_domain("ellipse:1,-2")
    with pytest.raises(ValidationError):
        parse_domain("square:1")
