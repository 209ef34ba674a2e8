import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import fresnel

from oscihomog import oscillatory as osc
from oscihomog.errors import ResolutionCapError, ValidationError
from oscihomog.geometry import ConvexDomain
from oscihomog.oscillatory import (
    Bump,
    OscillatoryIntegrand,
    case3_recenter,
    chart_phase,
    circle_chart,
    decay_exponent,
    eval_J,
    gl_panels,
    paraboloid,
    quadratic,
    tilted,
)


def dense_oracle(q: OscillatoryIntegrand) -> complex:
    """J by scipy adaptive quadrature on many subintervals (d - 1 = 1 only)."""
    s = q.amplitude.support
    edges = np.linspace(-s, s, 401)

    def part(f):
        return sum(quad(f, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
                   for a, b in zip(edges[:-1], edges[1:]))

    re = part(lambda z: q.amplitude(np.array([z]))[0] * math.cos(2 * math.pi * q.phase(np.array([z]))[0]))
    im = part(lambda z: q.amplitude(np.array([z]))[0] * math.sin(2 * math.pi * q.phase(np.array([z]))[0]))
    return complex(re, im)


# -- amplitude and integrand --------------------------------------------------

def test_bump_support_and_peak():
    u = Bump(0.75)
    assert u(np.array([0.0]))[0] == 1.0
    z = np.linspace(0.75, 2.0, 50)
    assert np.all(u(z) < 1e-14)
    u2 = Bump(0.75, dim=2)
    assert u2(np.array([[0.6, 0.6]]))[0] < 1e-14


def test_derived_quantities():
    q = OscillatoryIntegrand((3.0, 4.0), 0.5, quadratic())
    assert q.lam == pytest.approx(math.hypot(3.0, 2.0))
    assert q.eta1 * q.lam == pytest.approx(3.0)
    assert q.eta2 * q.lam == pytest.approx(2.0)
    assert q.rho_xi == pytest.approx(2.5)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(xi=(1.0,), rho=1.0, psi=quadratic()),
        dict(xi=(1.0, 1.0), rho=0.0, psi=quadratic()),
        dict(xi=(1.0, 1.0), rho=1.0, psi=circle_chart(), a0=1.5),
        dict(xi=(1.0, 1.0), rho=1.0, psi=quadratic(), amplitude=Bump(0.9)),
    ],
)
def test_invalid_integrands(kwargs):
    with pytest.raises(ValidationError):
        OscillatoryIntegrand(**kwargs)


def test_degenerate_hessian_rejected():
    flat = osc.PhaseGraph("cubic", 1, lambda z: np.asarray(z) ** 3, lambda z: 3 * np.asarray(z) ** 2,
                          lambda z: 6 * np.asarray(z))
    with pytest.raises(ValidationError, match="Hessian"):
        OscillatoryIntegrand((0.0, 10.0), 1.0, flat)


# -- eval_J -------------------------------------------------------------------

def test_zero_frequency_is_plain_integral():
    q = OscillatoryIntegrand((0.0, 0.0), 1.0, quadratic(), a0=1.0)
    oracle, _ = quad(lambda z: Bump(0.75)(np.array([z]))[0], -0.75, 0.75, epsabs=1e-15)
    assert abs(eval_J(q) - oracle) < 1e-12


@pytest.mark.parametrize("xi_d", [32.0, 256.0])
def test_quadratic_phase_matches_dense_oracle(xi_d):
    q = OscillatoryIntegrand((0.0, xi_d), 1.0, quadratic())
    assert abs(eval_J(q) - dense_oracle(q)) < 1e-10


@pytest.mark.parametrize("xi_d", [2.0**k for k in range(5, 13)])
def test_stationary_phase_constant(xi_d):
    # |J| sqrt(xi_d) -> u(0) = 1 with corrections O(1 / xi_d)
    q = OscillatoryIntegrand((0.0, xi_d), 1.0, quadratic())
    assert abs(eval_J(q)) * math.sqrt(xi_d) == pytest.approx(1.0, abs=2 / xi_d)


@pytest.mark.parametrize("lam", [50.0, 400.0, 3000.0])
def test_fresnel_sanity(lam):
    # int_0^1 exp(i lam t^2) dt with phase lam t^2 / (2 pi) cycles
    z, w = gl_panels(0.0, 1.0, lambda t: lam * t / math.pi, 30)
    val = np.sum(w * np.exp(1j * lam * z**2))
    arg = math.sqrt(2 * lam / math.pi)
    s, c = fresnel(arg)
    oracle = math.sqrt(math.pi / (2 * lam)) * complex(c, s)
    assert abs(val - oracle) < 1e-12
    assert abs(val) == pytest.approx(0.5 * math.sqrt(math.pi / lam), rel=2 / math.sqrt(lam))


def test_error_estimate_reported():
    q = OscillatoryIntegrand((0.0, 1000.0), 1.0, circle_chart(), a0=0.9)
    res = eval_J(q, full_output=True)
    assert res.error < 1e-10 * (1 + abs(res.value))
    assert res.nodes > 1000 * 0.3 * 30 / 2


def test_too_few_nodes_per_wavelength_rejected():
    q = OscillatoryIntegrand((0.0, 10.0), 1.0, quadratic())
    with pytest.raises(ValidationError):
        eval_J(q, nodes_per_wavelength=20)


def test_resolution_cap():
    q = OscillatoryIntegrand((0.0, 0.0, 1e5), 1.0, paraboloid())
    with pytest.raises(ResolutionCapError):
        eval_J(q)


def test_3d_zero_frequency():
    q = OscillatoryIntegrand((0.0, 0.0, 0.0), 1.0, paraboloid())
    # radial oracle: 2 pi int_0^s u(r) r dr
    oracle, _ = quad(lambda r: 2 * math.pi * r * Bump(0.75).radial(np.array([r * r]))[0], 0, 0.75,
                     epsabs=1e-15)
    assert abs(eval_J(q) - oracle) < 1e-11


def test_3d_radial_oracle():
    # for psi = |z|^2/2 and xi' = 0 the integrand is radial
    lam = 64.0
    q = OscillatoryIntegrand((0.0, 0.0, lam), 1.0, paraboloid())

    def f(r, part):
        v = 2 * math.pi * r * Bump(0.75).radial(np.array([r * r]))[0]
        return v * (math.cos if part == 0 else math.sin)(math.pi * lam * r * r)

    edges = np.linspace(0, 0.75, 201)
    re = sum(quad(f, a, b, args=(0,), epsabs=1e-15)[0] for a, b in zip(edges[:-1], edges[1:]))
    im = sum(quad(f, a, b, args=(1,), epsabs=1e-15)[0] for a, b in zip(edges[:-1], edges[1:]))
    assert abs(eval_J(q) - complex(re, im)) < 1e-10


def test_geometry_chart_phase():
    lg = ConvexDomain.ellipse(2.0, 1.0).local_graph(0.3, 0.5)
    q = OscillatoryIntegrand((0.0, 100.0), 1.0, chart_phase(lg), a0=0.4)
    assert abs(eval_J(q) - dense_oracle(q)) < 1e-10


# -- recentring ---------------------------------------------------------------

def test_recenter_identity_for_zero_slope():
    q = OscillatoryIntegrand((2.0, 7.0), 1.0, quadratic())
    assert case3_recenter(q) is q


def test_recenter_example():
    q = OscillatoryIntegrand((3.0, 5.0), 1.0, tilted(1.0))
    r = case3_recenter(q)
    assert tuple(r.xi) == (8.0, 5.0)
    assert r.psi.grad0[0] == 0.0
    assert abs(eval_J(q) - eval_J(r)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(
    xi1=st.floats(-30, 30), xi2=st.floats(-30, 30),
    rho=st.floats(0.2, 1.0), p=st.floats(-2, 2),
)
def test_recenter_preserves_J(xi1, xi2, rho, p):
    q = OscillatoryIntegrand((xi1, xi2), rho, tilted(p))
    r = case3_recenter(q)
    assert r.xi[0] == xi1 + xi2 * p
    assert abs(eval_J(q) - eval_J(r)) < 1e-10
    v, xi = np.hypot(*r.xi), np.hypot(xi1, xi2)
    assert xi / (1 + abs(p)) <= v * (1 + 1e-12) + 1e-300
    assert v <= (1 + abs(p)) * xi * (1 + 1e-12) + 1e-300


def test_recenter_3d():
    p = (0.3, -0.2)
    q = OscillatoryIntegrand((1.0, 2.0, 20.0), 1.0, paraboloid(p))
    r = case3_recenter(q)
    assert np.allclose(r.xi[:2], np.array([1.0, 2.0]) + 20.0 * np.array(p), rtol=0, atol=0)
    assert abs(eval_J(q) - eval_J(r)) < 1e-10


# -- decay fits ---------------------------------------------------------------

def test_stationary_family_slope():
    fit = decay_exponent(osc.family("stationary2d"), osc.default_lambda_grid("stationary2d"))
    assert fit.slope == pytest.approx(-0.5, abs=0.05)
    slope, r2 = fit
    assert r2 > 0.99
    assert fit.bound_product.max() <= 10 * np.median(fit.bound_product)


def test_nonstationary_sentinel():
    fit = decay_exponent(osc.family("nonstationary"), osc.default_lambda_grid("nonstationary"))
    assert fit.fast_decay and fit.slope == -math.inf
    assert fit.partial_slope <= -3


def test_tilted_family_matches_stationary_decay():
    fit = decay_exponent(osc.family("tilted"), osc.default_lambda_grid("tilted", 6))
    assert fit.slope == pytest.approx(-0.5, abs=0.05)


def test_rho_uniformity():
    vals = [abs(eval_J(osc.family("circle", rho)(512.0))) * math.sqrt(512.0) for rho in (1, 0.5, 0.25, 0.125)]
    assert max(vals) / min(vals) < 2


@pytest.mark.parametrize(
    "grid",
    [np.geomspace(32, 4096, 5), np.geomspace(32, 64, 8), np.array([-1.0, 1, 2, 3, 4, 5e3])],
)
def test_decay_exponent_grid_validation(grid):
    with pytest.raises(ValidationError):
        decay_exponent(osc.family("stationary2d"), grid)


def test_unknown_family():
    with pytest.raises(ValidationError):
        osc.family("wobbly")
