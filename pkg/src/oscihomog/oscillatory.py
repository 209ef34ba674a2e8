"""Oscillatory integrals over boundary charts.

The integral

    J = int_{|z| < a0} exp(2 pi i (xi' . z + xi_d psi(rho z) / rho)) u(z) dz

is computed by brute-force Gauss-Legendre panels that resolve the local phase
wavelength (d - 1 = 1), or a tensor product of such rules (d - 1 = 2).  The
panel layout follows the local frequency |xi' + xi_d grad psi(rho z)|, so the
stationary region of a quadratic phase is not over-resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import NumericalError, ResolutionCapError, ValidationError
from .geometry import LocalGraph

__all__ = [
    "PhaseGraph",
    "Bump",
    "OscillatoryIntegrand",
    "DecayFit",
    "eval_J",
    "decay_exponent",
    "case3_recenter",
    "family",
    "default_lambda_grid",
    "quadratic",
    "circle_chart",
    "tilted",
    "paraboloid",
    "chart_phase",
    "gl_panels",
    "FAMILIES",
]

NODES_PER_WAVELENGTH = 30
PANEL_ORDER = 10
BASE_CYCLES = 24          # resolution floor for the amplitude alone, in wavelengths per chart
FLOOR = 1e-14             # |J| below this counts as "decayed to zero"
MAX_NODES_1D = 2**24
MAX_NODES_2D = 2**31
MIN_DECADES = 1.5
_CHUNK = 2_000_000


# ---------------------------------------------------------------------------
# phases and amplitudes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhaseGraph:
    """Graph function psi on R^dim with gradient and Hessian evaluators.

    For dim = 1 the callables take arrays of z; for dim = 2 they take arrays
    of shape (..., 2).  ``hess`` returns psi'' (dim 1) or det Hess (dim 2).
    ``domain_radius`` bounds |z| where psi is defined.
    """

    name: str
    dim: int
    fn: Callable
    grad: Callable
    hess: Callable
    domain_radius: float = math.inf

    @property
    def grad0(self) -> np.ndarray:
        z0 = 0.0 if self.dim == 1 else np.zeros(2)
        return np.atleast_1d(np.asarray(self.grad(z0), dtype=float))

    def __call__(self, z):
        return self.fn(z)


def quadratic(p: float = 0.0) -> PhaseGraph:
    """psi(z) = p z + z^2 / 2."""
    return PhaseGraph(
        "quadratic" if p == 0 else f"tilted:{p:g}",
        1,
        lambda z: p * np.asarray(z) + 0.5 * np.asarray(z) ** 2,
        lambda z: p + np.asarray(z, dtype=float),
        lambda z: np.ones_like(np.asarray(z, dtype=float)),
    )


def tilted(p: float = 0.5) -> PhaseGraph:
    return quadratic(p)


def circle_chart() -> PhaseGraph:
    """psi(z) = 1 - sqrt(1 - z^2), the unit circle seen from its tangent line."""

    def fn(z):
        z = np.asarray(z, dtype=float)
        return z * z / (1.0 + np.sqrt(1.0 - z * z))  # cancellation-free form

    return PhaseGraph(
        "circle",
        1,
        fn,
        lambda z: np.asarray(z) / np.sqrt(1.0 - np.asarray(z) ** 2),
        lambda z: (1.0 - np.asarray(z) ** 2) ** -1.5,
        domain_radius=1.0,
    )


def paraboloid(p=(0.0, 0.0)) -> PhaseGraph:
    """psi(z) = p . z + |z|^2 / 2 in two variables."""
    p = np.asarray(p, dtype=float)

    def fn(z):
        z = np.asarray(z, dtype=float)
        return z @ p + 0.5 * np.sum(z * z, axis=-1)

    return PhaseGraph(
        "paraboloid",
        2,
        fn,
        lambda z: p + np.asarray(z, dtype=float),
        lambda z: np.ones(np.shape(z)[:-1]),
    )


def chart_phase(graph: LocalGraph) -> PhaseGraph:
    """Phase taken from a boundary chart built by ``ConvexDomain.local_graph``."""
    return PhaseGraph(
        f"chart:{graph.domain.descriptor}@{graph.t0:g}",
        1,
        graph.psi,
        graph.dpsi,
        graph.d2psi,
        domain_radius=graph.half_width,
    )


@dataclass(frozen=True)
class Bump:
    """exp(1 - 1/(1 - |z|^2/s^2)) on |z| < s, zero outside; u(0) = 1."""

    support: float
    dim: int = 1

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        r2 = z * z if self.dim == 1 else np.sum(z * z, axis=-1)
        return self.radial(r2)

    def radial(self, r2):
        t = np.asarray(r2, dtype=float) / self.support**2
        out = np.zeros_like(t)
        inside = t < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside]))
        return out


@dataclass(frozen=True, eq=False)
class OscillatoryIntegrand:
    """Phase data (xi, rho, psi) and bump amplitude for the integral J."""

    xi: tuple
    rho: float
    psi: PhaseGraph
    a0: float = 1.0
    amplitude: Bump | None = None
    hessian_grid: int = 65
    _xi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float).reshape(-1)
        if xi.size != self.psi.dim + 1:
            raise ValidationError(f"xi must have {self.psi.dim + 1} components")
        if not np.all(np.isfinite(xi)):
            raise ValidationError("xi must be finite")
        if not self.rho > 0:
            raise ValidationError("rho must be positive")
        if not self.a0 > 0:
            raise ValidationError("a0 must be positive")
        if self.rho * self.a0 >= self.psi.domain_radius:
            raise ValidationError("chart rho * a0 exceeds the domain of psi")
        object.__setattr__(self, "_xi", xi)
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", Bump(0.75 * self.a0, self.psi.dim))
        elif self.amplitude.support > 0.75 * self.a0 * (1 + 1e-12):
            raise ValidationError("amplitude support must lie in |z| < 3/4 a0")
        if self.hessian_lower_bound() <= 0:
            raise ValidationError("Hessian of psi degenerates on the chart")

    @property
    def dim_minus_1(self) -> int:
        return self.psi.dim

    @property
    def xi_tangent(self) -> np.ndarray:
        return self._xi[:-1].copy()

    @property
    def xi_normal(self) -> float:
        return float(self._xi[-1])

    @property
    def lam(self) -> float:
        """lambda = (|xi'|^2 + rho^2 xi_d^2)^(1/2)."""
        return float(np.hypot(np.linalg.norm(self._xi[:-1]), self.rho * self._xi[-1]))

    @property
    def eta1(self) -> np.ndarray:
        return self._xi[:-1] / self.lam

    @property
    def eta2(self) -> float:
        return self.rho * self._xi[-1] / self.lam

    @property
    def rho_xi(self) -> float:
        return float(self.rho * np.linalg.norm(self._xi))

    def hessian_lower_bound(self) -> float:
        """min |det Hess psi| over a grid of the scaled chart rho * |z| < rho * a0."""
        s = np.linspace(-1, 1, self.hessian_grid) * self.rho * self.a0 * (1 - 1e-9)
        if self.psi.dim == 1:
            return float(np.min(np.abs(self.psi.hess(s))))
        zz = np.stack(np.meshgrid(s, s, indexing="ij"), axis=-1)
        zz = zz[np.sum(zz * zz, axis=-1) < (self.rho * self.a0) ** 2]
        return float(np.min(np.abs(self.psi.hess(zz))))

    def phase(self, z):
        """xi' . z + xi_d psi(rho z) / rho (in cycles)."""
        z = np.asarray(z, dtype=float)
        lin = self._xi[0] * z if self.psi.dim == 1 else z @ self._xi[:-1]
        return lin + self._xi[-1] * self.psi(self.rho * z) / self.rho


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def gl_panels(lo: float, hi: float, freq: Callable, nodes_per_wavelength: float,
              base_freq: float = 0.0, order: int = PANEL_ORDER, samples: int = 4097,
              max_nodes: int = MAX_NODES_1D):
    """Composite Gauss-Legendre rule on [lo, hi] with panels sized to freq(z).

    Panel edges equidistribute the cumulative wavelength count
    W(z) = int_lo^z (freq + base_freq), each panel carrying order /
    nodes_per_wavelength wavelengths.
    """
    zs = np.linspace(lo, hi, samples)
    f = np.abs(np.asarray(freq(zs), dtype=float)) + base_freq
    # integrate the piecewise-linear interpolant of the sampled frequency,
    # bumped by the sample spacing so peaks between samples are not missed
    f = np.maximum(f, np.maximum(np.r_[f[1:], f[-1]], np.r_[f[0], f[:-1]]))
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(zs))))
    n_pan = max(1, math.ceil(cum[-1] * nodes_per_wavelength / order))
    if n_pan * order > max_nodes:
        raise ResolutionCapError(
            f"{n_pan * order} quadrature nodes needed, above the cap of {max_nodes}; reduce |xi|"
        )
    edges = np.interp(np.linspace(0.0, cum[-1], n_pan + 1), cum, zs)
    edges[0], edges[-1] = lo, hi
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _axis_freq(q: OscillatoryIntegrand, axis: int, s: float, cross: int = 65):
    """Local frequency along one axis, maximized over the other coordinate."""
    xi = q._xi
    if q.psi.dim == 1:
        return lambda z: np.abs(xi[0] + xi[1] * q.psi.grad(q.rho * z))
    other = np.linspace(-s, s, cross)

    def freq(z):
        zz = np.empty((z.size, cross, 2))
        zz[..., axis] = z[:, None]
        zz[..., 1 - axis] = other[None, :]
        g = q.psi.grad(q.rho * zz)[..., axis]
        return np.max(np.abs(xi[axis] + xi[-1] * g), axis=1)

    return freq


def _integrate(q: OscillatoryIntegrand, ppw: float) -> tuple[complex, int]:
    s = q.amplitude.support
    base = BASE_CYCLES / (2 * s)
    if q.psi.dim == 1:
        z, w = gl_panels(-s, s, _axis_freq(q, 0, s), ppw, base)
        val = np.sum(w * q.amplitude(z) * np.exp(2j * np.pi * q.phase(z)))
        return complex(val), z.size

    z1, w1 = gl_panels(-s, s, _axis_freq(q, 0, s), ppw, base)
    z2, w2 = gl_panels(-s, s, _axis_freq(q, 1, s), ppw, base)
    if z1.size * z2.size > MAX_NODES_2D:
        raise ResolutionCapError(
            f"{z1.size}x{z2.size} tensor nodes needed, above the cap of {MAX_NODES_2D}; reduce |xi|"
        )
    xi, rho = q._xi, q.rho
    rows = max(1, _CHUNK // z2.size)
    total = 0.0 + 0.0j
    count = 0
    for lo in range(0, z1.size, rows):
        a = z1[lo:lo + rows]
        # columns outside the support disk of the widest row contribute nothing
        reach = math.sqrt(max(s * s - float(np.min(a * a)), 0.0))
        j0, j1 = np.searchsorted(z2, [-reach, reach])
        b, wb = z2[j0:j1], w2[j0:j1]
        if b.size == 0:
            continue
        zz = np.empty((a.size, b.size, 2))
        zz[..., 0] = a[:, None]
        zz[..., 1] = b[None, :]
        amp = q.amplitude.radial(a[:, None] ** 2 + b[None, :] ** 2)
        ph = xi[0] * zz[..., 0] + xi[1] * zz[..., 1] + xi[2] * q.psi(rho * zz) / rho
        vals = amp * np.exp(2j * np.pi * ph)
        total += w1[lo:lo + rows] @ (vals @ wb)
        count += vals.size
    return complex(total), count


@dataclass
class JResult:
    value: complex
    error: float
    nodes: int


def eval_J(q: OscillatoryIntegrand, nodes_per_wavelength: float = NODES_PER_WAVELENGTH,
           tol: float = 1e-10, full_output: bool = False):
    """J by wavelength-resolving Gauss-Legendre panels.

    The error estimate is the difference from the same rule at half the
    density; a NumericalError is raised if it exceeds tol * (1 + |J|).
    """
    if nodes_per_wavelength < NODES_PER_WAVELENGTH:
        raise ValidationError(f"need at least {NODES_PER_WAVELENGTH} nodes per wavelength")
    fine, n = _integrate(q, nodes_per_wavelength)
    coarse, _ = _integrate(q, nodes_per_wavelength / 2)
    err = abs(fine - coarse)
    if err > tol * (1 + abs(fine)):
        err_msg = f"quadrature error estimate {err:.3g} above tolerance"
        exc = NumericalError(err_msg)
        exc.hint = "increase nodes_per_wavelength"
        raise exc
    if full_output:
        return JResult(fine, err, n)
    return fine


def case3_recenter(q: OscillatoryIntegrand) -> OscillatoryIntegrand:
    """Move the linear part of psi into the frequency.

    psi_1(z) = psi(z) - grad psi(0) . z and v' = xi' + xi_d grad psi(0);
    the phase v' . z + xi_d psi_1(rho z) / rho is identical to the original.
    """
    p = q.psi.grad0
    if not np.any(p):
        return q
    psi = q.psi
    if psi.dim == 1:
        p0 = float(p[0])
        new = PhaseGraph(
            f"{psi.name}-recentred",
            1,
            lambda z: psi.fn(z) - p0 * np.asarray(z),
            lambda z: psi.grad(z) - p0,
            psi.hess,
            psi.domain_radius,
        )
    else:
        new = PhaseGraph(
            f"{psi.name}-recentred",
            2,
            lambda z: psi.fn(z) - np.asarray(z) @ p,
            lambda z: psi.grad(z) - p,
            psi.hess,
            psi.domain_radius,
        )
    xi = q._xi.copy()
    xi[:-1] = xi[:-1] + xi[-1] * p
    return replace(q, xi=tuple(xi), psi=new)


# ---------------------------------------------------------------------------
# decay fits
# ---------------------------------------------------------------------------

@dataclass
class DecayFit:
    """Least-squares slope of log|J| against log(rho |xi|).

    ``slope`` is -inf when some |J| fell below the floor (``fast_decay``);
    ``partial_slope`` is then the fit over the points above it.
    """

    slope: float
    r2: float
    fast_decay: bool
    partial_slope: float
    lambdas: np.ndarray
    rho: np.ndarray
    rho_xi: np.ndarray
    abs_J: np.ndarray
    exponent: float

    @property
    def bound_product(self) -> np.ndarray:
        """|J| (rho |xi|)^((d-1)/2)."""
        return self.abs_J * self.rho_xi**self.exponent

    def __iter__(self):
        yield self.slope
        yield self.r2


def _fit(x, y):
    if x.size < 2:
        return math.nan, math.nan
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss if ss > 0 else 1.0
    return float(slope), float(r2)


def decay_exponent(family: Callable[[float], OscillatoryIntegrand], lambda_grid: Sequence[float],
                   nodes_per_wavelength: float = NODES_PER_WAVELENGTH,
                   min_decades: float = MIN_DECADES) -> DecayFit:
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.size < 6:
        raise ValidationError("lambda grid needs at least 6 points")
    if np.any(lam <= 0) or np.log10(lam.max() / lam.min()) < min_decades - 1e-12:
        raise ValidationError(f"lambda grid must be positive and span {min_decades} decades")
    qs = [family(float(v)) for v in lam]
    abs_j = np.array([abs(eval_J(q, nodes_per_wavelength)) for q in qs])
    rho_xi = np.array([q.rho_xi for q in qs])
    rho = np.array([q.rho for q in qs])
    exponent = qs[0].dim_minus_1 / 2
    ok = abs_j >= FLOOR
    partial, r2_partial = _fit(np.log(rho_xi[ok]), np.log(abs_j[ok]))
    if ok.all():
        return DecayFit(partial, r2_partial, False, partial, lam, rho, rho_xi, abs_j, exponent)
    return DecayFit(-math.inf, r2_partial, True, partial, lam, rho, rho_xi, abs_j, exponent)


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------

def _stationary2d(lam, rho=1.0):
    return OscillatoryIntegrand((0.0, lam), rho, quadratic(), a0=1.0)


def _nonstationary(lam, rho=1.0):
    return OscillatoryIntegrand((lam, 0.01 * lam), rho, quadratic(), a0=0.5)


def _tilted(lam, rho=1.0, p=0.5):
    # xi' = -xi_d p puts the stationary point of the recentred phase at z = 0
    return OscillatoryIntegrand((-p * lam, lam), rho, tilted(p), a0=1.0)


def _stationary3d(lam, rho=1.0):
    return OscillatoryIntegrand((0.0, 0.0, lam), rho, paraboloid(), a0=1.0)


def _circle(lam, rho=1.0):
    # frequency scaled so rho |xi| = lam
    return OscillatoryIntegrand((0.0, lam / rho), rho, circle_chart(), a0=0.9)


FAMILIES = {
    "stationary2d": (_stationary2d, (32.0, 4096.0)),
    "nonstationary": (_nonstationary, (32.0, 4096.0)),
    "tilted": (_tilted, (32.0, 4096.0)),
    "stationary3d": (_stationary3d, (32.0, 1024.0)),
    "circle": (_circle, (32.0, 4096.0)),
}


def family(name: str, rho: float = 1.0) -> Callable[[float], OscillatoryIntegrand]:
    try:
        make = FAMILIES[name][0]
    except KeyError:
        raise ValidationError(f"unknown family '{name}' (choose from {', '.join(FAMILIES)})") from None
    return lambda lam: make(lam, rho)


def default_lambda_grid(name: str, n: int = 8, lo: float | None = None, hi: float | None = None):
    if name not in FAMILIES:
        raise ValidationError(f"unknown family '{name}'")
    d_lo, d_hi = FAMILIES[name][1]
    return np.geomspace(lo or d_lo, hi or d_hi, n)
