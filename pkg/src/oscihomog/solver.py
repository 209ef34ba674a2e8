"""Harmonic extension of boundary data (A = identity, scalar case).

Two backends:

``disk``
    The closed-form Poisson kernel of a centred circle, integrated against
    the boundary samples with the trapezoid rule.

``bie``
    Nystrom discretization of the interior Dirichlet problem through a
    double-layer potential u = D[phi].  The density solves
    (-1/2 I + K) phi = h with the smooth double-layer kernel

        k(s, t) = (1/2pi) (gamma(s) - gamma(t)) . n(t) / |gamma(s) - gamma(t)|^2,
        k(t, t) = -curvature(t) / (4 pi).

For large N the density is split as phi = -2h + w.  Since K maps any data to
a smooth function, w solves (-1/2 I + K) w = 2 K h with a smooth right-hand
side and is resolved on a coarse grid, then trigonometrically interpolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotInteriorError, ResolutionCapError, SolveError, ValidationError
from .geometry import INSIDE, ConvexDomain
from .periodic import FourierData

__all__ = [
    "BoundarySolution",
    "solve",
    "solve_oscillating",
    "evaluate_interior",
    "evaluate_polar",
    "resolution_rule",
    "poisson_kernel_disk",
    "poisson_kernel_derivative",
    "kernel_derivative_check",
    "DEFAULT_POINTS_PER_WAVELENGTH",
    "DEFAULT_NODE_CAP",
]

DEFAULT_POINTS_PER_WAVELENGTH = 20
DEFAULT_NODE_CAP = 2**20
DENSE_MAX = 2048
COARSE_MIN = 256
RESIDUAL_TOL = 1e-10
_CHUNK = 2_000_000


@dataclass(frozen=True, eq=False)
class BoundarySolution:
    domain: ConvexDomain
    nodes: np.ndarray
    data: np.ndarray
    density: np.ndarray | None
    backend: str
    residual: float | None = None
    coarse_size: int | None = None

    @property
    def resolution(self) -> int:
        return self.nodes.size

    @property
    def weights(self) -> np.ndarray:
        return self.domain.speed(self.nodes) * (2 * np.pi / self.resolution)


def _double_layer_rows(targets, src, normals, weights):
    """Matrix of (1/2pi) (x - y) . n_y / |x - y|^2 * w_y for off-boundary targets."""
    dx = targets[:, None, 0] - src[None, :, 0]
    dy = targets[:, None, 1] - src[None, :, 1]
    r2 = dx * dx + dy * dy
    return (dx * normals[None, :, 0] + dy * normals[None, :, 1]) / (2 * np.pi * r2) * weights[None, :]


def _boundary_rows(dom, t_rows, t_src, src, normals, weights):
    """Nystrom rows of K at boundary parameters t_rows (may coincide with sources)."""
    targets = dom.point(t_rows)
    gap = np.abs((t_rows[:, None] - t_src[None, :] + np.pi) % (2 * np.pi) - np.pi)
    same = gap < 1e-13
    dx = targets[:, None, 0] - src[None, :, 0]
    dy = targets[:, None, 1] - src[None, :, 1]
    r2 = np.where(same, 1.0, dx * dx + dy * dy)
    rows = (dx * normals[None, :, 0] + dy * normals[None, :, 1]) / (2 * np.pi * r2)
    if same.any():
        i, j = np.nonzero(same)
        rows[i, j] = -dom.curvature(t_src[j]) / (4 * np.pi)
    return rows * weights[None, :]


def _apply_rows(dom, t_rows, t_src, src, normals, weights, vec):
    out = np.empty(t_rows.size)
    step = max(1, _CHUNK // max(1, t_src.size))
    for lo in range(0, t_rows.size, step):
        out[lo:lo + step] = _boundary_rows(dom, t_rows[lo:lo + step], t_src, src, normals, weights) @ vec
    return out


def _zero_pad_interp(values, n):
    """Trigonometric interpolation of m equispaced samples onto n = q*m points."""
    m = values.size
    spec = np.fft.rfft(values)
    if m % 2 == 0:
        spec[-1] *= 0.5  # split the Nyquist mode evenly between +-m/2
    out = np.zeros(n // 2 + 1, dtype=complex)
    out[: spec.size] = spec
    return np.fft.irfft(out, n=n) * (n / m)


def _check_nodes(n):
    if int(n) != n or n < 16 or n % 2:
        raise ValidationError("node count must be an even integer >= 16")
    return int(n)


def solve(
    dom: ConvexDomain,
    h: Callable[[np.ndarray], np.ndarray],
    n: int,
    backend: str = "bie",
    dense_max: int = DENSE_MAX,
) -> BoundarySolution:
    """Sample ``h`` (called with an (n, 2) array of boundary points) at n
    equispaced parameters and prepare the interior evaluator."""
    n = _check_nodes(n)
    if backend == "bie" and n > dense_max and n % COARSE_MIN:
        raise ValidationError(f"node counts above {dense_max} must be multiples of {COARSE_MIN}")
    t = np.arange(n) * (2 * np.pi / n)
    pts = dom.point(t)
    data = np.asarray(h(pts), dtype=float).reshape(-1)
    if data.shape != (n,) or not np.all(np.isfinite(data)):
        raise ValidationError("boundary data must be finite with one value per node")
    if backend == "disk":
        if dom.kind != "circle":
            raise ValidationError("disk backend requires a circle domain")
        return BoundarySolution(dom, t, data, None, "disk")
    if backend != "bie":
        raise ValidationError(f"unknown backend '{backend}'")

    normals = dom.normal(t)
    weights = dom.speed(t) * (2 * np.pi / n)
    if n <= dense_max:
        a = _boundary_rows(dom, t, t, pts, normals, weights) - 0.5 * np.eye(n)
        try:
            phi = np.linalg.solve(a, data)
        except np.linalg.LinAlgError as exc:
            raise SolveError(f"Nystrom system is singular: {exc}") from None
        residual = float(np.max(np.abs(a @ phi - data)))
        coarse = None
    else:
        phi, coarse = _split_solve(dom, t, pts, normals, weights, data)
        # the residual is a smooth function of the node parameter; sampling a
        # strided set of nodes together with their midpoints checks it
        idx = np.unique(np.concatenate([np.arange(0, n, max(1, n // 128)), np.arange(n // 256, n, max(1, n // 128))]))
        kphi = _apply_rows(dom, t[idx], t, pts, normals, weights, phi)
        residual = float(np.max(np.abs(kphi - 0.5 * phi[idx] - data[idx])))
    scale = max(1.0, float(np.max(np.abs(data))))
    if not np.isfinite(residual) or residual > RESIDUAL_TOL * scale:
        raise SolveError(f"integral equation residual {residual:.2e} exceeds tolerance")
    return BoundarySolution(dom, t, data, phi, "bie", residual=residual, coarse_size=coarse)


def _split_solve(dom, t, pts, normals, weights, data, m0=COARSE_MIN, tail_tol=1e-11):
    # coarse nodes are a subset of the fine nodes; near-coincident off-grid
    # targets would lose digits to cancellation in the kernel numerator
    n = t.size
    m = m0
    scale = max(1.0, float(np.max(np.abs(data))))
    while True:
        s = t[:: n // m]
        rhs = 2.0 * _apply_rows(dom, s, t, pts, normals, weights, data)
        a = _boundary_rows(dom, s, s, pts[:: n // m], normals[:: n // m], weights[:: n // m] * (n // m))
        a -= 0.5 * np.eye(m)
        try:
            w = np.linalg.solve(a, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolveError(f"coarse Nystrom system is singular: {exc}") from None
        coef = np.abs(np.fft.rfft(w)) / m
        if coef[m // 4:].max(initial=0.0) <= tail_tol * scale or n % (2 * m) or 4 * m > n:
            break
        m *= 2
    return -2.0 * data + _zero_pad_interp(w, n), m


def resolution_rule(
    dom: ConvexDomain,
    g: FourierData,
    eps: float,
    points_per_wavelength: float = DEFAULT_POINTS_PER_WAVELENGTH,
    node_cap: int = DEFAULT_NODE_CAP,
) -> int:
    """Node count max(256, ceil(ppw * perimeter * max_freq / eps)).

    Rounded up to even, and above the dense-solve limit to a multiple of 1024
    so the coarse grids of the split solve nest inside the fine one.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    n = max(256, math.ceil(points_per_wavelength * dom.perimeter * g.max_freq / eps))
    n += n % 2
    if n > DENSE_MAX:
        n = -(-n // 1024) * 1024
    if n > node_cap:
        raise ResolutionCapError(
            f"eps={eps:g} needs {n} boundary nodes, above the cap of {node_cap}; use a larger eps"
        )
    return n


def solve_oscillating(
    dom: ConvexDomain,
    g: FourierData,
    eps: float,
    n: int | None = None,
    backend: str | None = None,
    points_per_wavelength: float = DEFAULT_POINTS_PER_WAVELENGTH,
    node_cap: int = DEFAULT_NODE_CAP,
) -> BoundarySolution:
    """Solve with boundary data g(y / eps)."""
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if g.dim != 2:
        raise ValidationError("boundary data must live on the 2-torus")
    if n is None:
        n = resolution_rule(dom, g, eps, points_per_wavelength, node_cap)
    elif n > node_cap:
        raise ResolutionCapError(f"{n} nodes exceeds the cap of {node_cap}")
    if backend is None:
        backend = "disk" if dom.kind == "circle" else "bie"
    return solve(dom, lambda y: np.real(g.evaluate_scaled(y, eps)), n, backend)


def _require_inside(dom, pts):
    labels = dom.contains(pts)
    if np.any(labels != INSIDE):
        bad = pts[np.asarray(labels != INSIDE).reshape(-1)][0]
        raise NotInteriorError(f"point {bad.tolist()} is not strictly inside the domain")


def evaluate_interior(sol: BoundarySolution, x, check: bool = True):
    """u at interior point(s) ``x`` of shape (2,) or (..., 2)."""
    x = np.asarray(x, dtype=float)
    pts = x.reshape(-1, 2)
    if check:
        _require_inside(sol.domain, pts)
    dom = sol.domain
    y = dom.point(sol.nodes)
    out = np.empty(pts.shape[0])
    step = max(1, _CHUNK // sol.resolution)
    if sol.backend == "disk":
        r = dom.params[0]
        w = sol.data * (2 * np.pi / sol.resolution)
        for lo in range(0, pts.shape[0], step):
            p = pts[lo:lo + step]
            ker = poisson_kernel_disk(p, y, r)
            out[lo:lo + step] = ker @ w * r
    else:
        normals = dom.normal(sol.nodes)
        weights = sol.weights
        for lo in range(0, pts.shape[0], step):
            out[lo:lo + step] = _double_layer_rows(pts[lo:lo + step], y, normals, weights) @ sol.density
    return float(out[0]) if x.ndim == 1 else out.reshape(x.shape[:-1])


def evaluate_polar(sol: BoundarySolution, radii) -> np.ndarray:
    """Disk backend only: u on the polar grid (radii x node angles) via FFT.

    Row i holds u(radii[i] * (cos t_j, sin t_j)) for the node angles t_j.
    """
    if sol.backend != "disk":
        raise ValidationError("polar evaluation needs the disk backend")
    r = sol.domain.params[0]
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 0) or np.any(radii >= r):
        raise NotInteriorError("polar radii must lie in [0, r)")
    n = sol.resolution
    spec = np.fft.rfft(sol.data)
    k = np.arange(spec.size)
    out = np.empty((radii.size, n))
    for i, rho in enumerate(radii):
        out[i] = np.fft.irfft(spec * (rho / r) ** k, n=n)
    return out


def poisson_kernel_disk(x, y, r: float = 1.0):
    """(r^2 - |x|^2) / (2 pi r |x - y|^2) for x of shape (P, 2), y of shape (N, 2)."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    dx = x[:, None, 0] - y[None, :, 0]
    dy = x[:, None, 1] - y[None, :, 1]
    num = r * r - (x[:, 0] ** 2 + x[:, 1] ** 2)
    return num[:, None] / (2 * np.pi * r * (dx * dx + dy * dy))


def poisson_kernel_derivative(x, y, alpha) -> np.ndarray:
    """Exact D^alpha_y of the unit-disk kernel (1 - |x|^2) / (2 pi |x - y|^2).

    With z = y1 + i y2 and w = x1 + i x2, |x - y|^{-2} = 1 / ((z - w)(conj z - conj w)),
    so d_z^a d_zbar^b gives (-1)^(a+b) a! b! (z - w)^-(a+1) (conj z - conj w)^-(b+1);
    d/dy1 = d_z + d_zbar and d/dy2 = i (d_z - d_zbar) are expanded binomially.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    a1, a2 = (int(v) for v in alpha)
    w = x[:, 0] + 1j * x[:, 1]
    z = y[:, 0] + 1j * y[:, 1]
    dz = z[None, :] - w[:, None]
    dzb = np.conj(dz)
    total = np.zeros(dz.shape, dtype=complex)
    # (d_z + d_zbar)^a1 (i d_z - i d_zbar)^a2
    for i in range(a1 + 1):
        c1 = math.comb(a1, i)
        for j in range(a2 + 1):
            c2 = math.comb(a2, j) * (1j) ** a2 * (-1) ** (a2 - j)
            a = i + j
            b = (a1 - i) + (a2 - j)
            coeff = c1 * c2 * (-1) ** (a + b) * math.factorial(a) * math.factorial(b)
            total += coeff / (dz ** (a + 1) * dzb ** (b + 1))
    pref = (1.0 - np.abs(w) ** 2) / (2 * np.pi)
    return (pref[:, None] * total).real


def _poisson_kernel_fd(x, y, alpha, step=1e-5):
    """Central finite differences of the unit-disk kernel in y (independent check)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    a1, a2 = (int(v) for v in alpha)
    out = np.zeros((x.shape[0], y.shape[0]))
    for i in range(a1 + 1):
        for j in range(a2 + 1):
            c = math.comb(a1, i) * math.comb(a2, j) * (-1) ** (i + j)
            shift = np.array([(a1 / 2 - i) * step, (a2 / 2 - j) * step])
            out += c * poisson_kernel_disk(x, y + shift, 1.0)
    return out / step ** (a1 + a2)


def kernel_derivative_check(orders, x_set, y_set, method: str = "exact") -> float:
    """max over the grid of |D^alpha_y P(x, y)| |x - y|^(1 + |alpha|) on the unit disk."""
    x_set = np.atleast_2d(np.asarray(x_set, dtype=float))
    y_set = np.atleast_2d(np.asarray(y_set, dtype=float))
    if np.any(np.hypot(x_set[:, 0], x_set[:, 1]) >= 1):
        raise NotInteriorError("kernel checks need interior x")
    dist = np.linalg.norm(x_set[:, None, :] - y_set[None, :, :], axis=-1)
    if np.any(dist < 1e-3):
        raise ValidationError("kernel checks need |x - y| >= 1e-3")
    deriv = {"exact": poisson_kernel_derivative, "fd": _poisson_kernel_fd}[method]
    best = 0.0
    for alpha in orders:
        order = sum(alpha)
        if order > 3:
            raise ValidationError("derivative orders above 3 are not supported")
        vals = np.abs(deriv(x_set, y_set, alpha)) * dist ** (1 + order)
        best = max(best, float(vals.max()))
    return best
