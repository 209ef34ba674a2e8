"""Smooth uniformly convex planar domains.

Every domain is star-shaped about the origin and parametrized
counterclockwise by t in [0, 2 pi):

* ``circle(r)``:     r (cos t, sin t)
* ``ellipse(a, b)``: (a cos t, b sin t)
* ``radial(prof)``:  r(t) (cos t, sin t),  r(t) = sum_k a_k cos kt + b_k sin kt
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import NotInteriorError, ValidationError

__all__ = ["ConvexDomain", "LocalGraph", "parse_domain", "INSIDE", "BOUNDARY", "OUTSIDE"]

INSIDE, BOUNDARY, OUTSIDE = "inside", "boundary", "outside"

TWO_PI = 2.0 * np.pi
BOUNDARY_BAND = 1e-12


def _rot(v, angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


@dataclass(frozen=True, eq=False)
class ConvexDomain:
    """A smooth closed convex curve and the domain it bounds.

    Use the :meth:`circle`, :meth:`ellipse` and :meth:`radial` constructors.
    ``min_curvature`` is certified on a ``grid``-point parameter grid and must
    be positive.
    """

    kind: str
    params: tuple
    grid: int = 4096
    perimeter: float = field(init=False)
    min_curvature: float = field(init=False)
    max_curvature: float = field(init=False)

    def __post_init__(self):
        if self.kind not in ("circle", "ellipse", "radial"):
            raise ValidationError(f"unknown domain kind '{self.kind}'")
        if not all(np.isfinite(np.asarray(p, dtype=float)).all() for p in self.params):
            raise ValidationError("domain parameters must be finite")
        if self.kind in ("circle", "ellipse") and min(self.params) <= 0:
            raise ValidationError("curvature bound not positive")
        if self.kind == "radial":
            t = np.linspace(0.0, TWO_PI, self.grid, endpoint=False)
            if np.min(self._radius(t)[0]) <= 0:
                raise ValidationError("radial profile must stay positive")
        t = np.linspace(0.0, TWO_PI, self.grid, endpoint=False)
        with np.errstate(divide="ignore", invalid="ignore"):
            kappa = self.curvature(t)
        kmin = float(np.min(kappa)) if np.all(np.isfinite(kappa)) else -np.inf
        if not kmin > 0:
            raise ValidationError("curvature bound not positive")
        object.__setattr__(self, "min_curvature", kmin)
        object.__setattr__(self, "max_curvature", float(np.max(kappa)))
        object.__setattr__(self, "perimeter", float(np.mean(self.speed(t)) * TWO_PI))

    # -- constructors ----------------------------------------------------------

    @classmethod
    def circle(cls, r: float = 1.0) -> "ConvexDomain":
        return cls("circle", (float(r),))

    @classmethod
    def ellipse(cls, a: float, b: float) -> "ConvexDomain":
        return cls("ellipse", (float(a), float(b)))

    @classmethod
    def radial(cls, cos_coeffs, sin_coeffs=None) -> "ConvexDomain":
        a = tuple(float(v) for v in cos_coeffs)
        b = tuple(float(v) for v in (sin_coeffs if sin_coeffs is not None else [0.0] * len(a)))
        n = max(len(a), len(b))
        a += (0.0,) * (n - len(a))
        b += (0.0,) * (n - len(b))
        return cls("radial", (a, b))

    @property
    def descriptor(self) -> str:
        if self.kind == "circle":
            return f"circle:{self.params[0]:g}"
        if self.kind == "ellipse":
            return f"ellipse:{self.params[0]:g},{self.params[1]:g}"
        return "radial:" + json.dumps({"cos": list(self.params[0]), "sin": list(self.params[1])})

    # -- parametrization -------------------------------------------------------

    def _radius(self, t):
        a, b = self.params
        k = np.arange(len(a))
        kt = np.multiply.outer(t, k)
        c, s = np.cos(kt), np.sin(kt)
        r = c @ np.asarray(a) + s @ np.asarray(b)
        r1 = (-s * k) @ np.asarray(a) + (c * k) @ np.asarray(b)
        r2 = (-c * k**2) @ np.asarray(a) + (-s * k**2) @ np.asarray(b)
        return r, r1, r2

    def derivatives(self, t):
        """Return gamma(t), gamma'(t), gamma''(t), each of shape ``t.shape + (2,)``."""
        t = np.asarray(t, dtype=float)
        c, s = np.cos(t), np.sin(t)
        if self.kind == "circle":
            (r,) = self.params
            g0 = np.stack([r * c, r * s], axis=-1)
            g1 = np.stack([-r * s, r * c], axis=-1)
            g2 = -g0
        elif self.kind == "ellipse":
            a, b = self.params
            g0 = np.stack([a * c, b * s], axis=-1)
            g1 = np.stack([-a * s, b * c], axis=-1)
            g2 = -g0
        else:
            r, r1, r2 = self._radius(t)
            e = np.stack([c, s], axis=-1)
            e_perp = np.stack([-s, c], axis=-1)
            g0 = r[..., None] * e
            g1 = r1[..., None] * e + r[..., None] * e_perp
            g2 = (r2 - r)[..., None] * e + 2 * r1[..., None] * e_perp
        return g0, g1, g2

    def point(self, t):
        return self.derivatives(t)[0]

    def speed(self, t):
        return np.linalg.norm(self.derivatives(t)[1], axis=-1)

    def tangent(self, t):
        g1 = self.derivatives(t)[1]
        return g1 / np.linalg.norm(g1, axis=-1, keepdims=True)

    def normal(self, t):
        """Outward unit normal (the tangent rotated clockwise)."""
        tau = self.tangent(t)
        return np.stack([tau[..., 1], -tau[..., 0]], axis=-1)

    def curvature(self, t):
        """Signed curvature, positive for a counterclockwise convex curve."""
        _, g1, g2 = self.derivatives(t)
        cross = g1[..., 0] * g2[..., 1] - g1[..., 1] * g2[..., 0]
        return cross / np.linalg.norm(g1, axis=-1) ** 3

    def boundary_radius(self, theta):
        """Distance from the origin to the boundary along the ray at angle ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "circle":
            return np.full(theta.shape, self.params[0])
        if self.kind == "ellipse":
            a, b = self.params
            return 1.0 / np.sqrt((np.cos(theta) / a) ** 2 + (np.sin(theta) / b) ** 2)
        return self._radius(theta)[0]

    @property
    def area(self) -> float:
        if self.kind == "circle":
            return float(np.pi * self.params[0] ** 2)
        if self.kind == "ellipse":
            return float(np.pi * self.params[0] * self.params[1])
        t = np.linspace(0.0, TWO_PI, self.grid, endpoint=False)
        return float(0.5 * np.mean(self._radius(t)[0] ** 2) * TWO_PI)

    # -- point queries ---------------------------------------------------------

    def contains(self, x):
        """Classify points as ``inside``, ``boundary`` or ``outside``.

        Returns a string for a single point and an array of strings otherwise.
        """
        x = np.asarray(x, dtype=float)
        pts = x.reshape(-1, 2)
        rad = np.hypot(pts[:, 0], pts[:, 1])
        rb = self.boundary_radius(np.arctan2(pts[:, 1], pts[:, 0]))
        gap = rad - rb
        out = np.where(gap < -BOUNDARY_BAND, INSIDE, np.where(gap > BOUNDARY_BAND, OUTSIDE, BOUNDARY))
        out = out.astype(object)
        return out[0] if x.ndim == 1 else out.reshape(x.shape[:-1])

    def _foot_equation(self, x):
        def f(t):
            g0, g1, _ = self.derivatives(t)
            return float(np.dot(g0 - x, g1))

        def fprime(t):
            g0, g1, g2 = self.derivatives(t)
            return float(np.dot(g1, g1) + np.dot(g0 - x, g2))

        return f, fprime

    def _refine_foot(self, x, t_lo, t_hi, t0, tol=1e-12):
        """Safeguarded Newton for (gamma(t) - x) . gamma'(t) = 0 on [t_lo, t_hi]."""
        f, fprime = self._foot_equation(x)
        f_lo, f_hi = f(t_lo), f(t_hi)
        if f_lo > 0 or f_hi < 0:
            return t0
        t = t0
        for _ in range(50):
            ft, dft = f(t), fprime(t)
            if ft < 0:
                t_lo = t
            else:
                t_hi = t
            step = ft / dft if dft > 0 else np.inf
            t_new = t - step
            if not (t_lo < t_new < t_hi):
                t_new = 0.5 * (t_lo + t_hi)
            if abs(t_new - t) < tol:
                return t_new
            t = t_new
        return brentq(f, t_lo, t_hi, xtol=tol)

    def closest_point(self, x, seeds: int = 64) -> tuple[float, float]:
        """Return ``(distance, t)`` of the boundary point nearest to ``x``.

        Ties are broken toward the smallest parameter; the centre of a circle
        returns t = 0.
        """
        x = np.asarray(x, dtype=float)
        if self.kind == "circle":
            r = self.params[0]
            rad = float(np.hypot(*x))
            t = 0.0 if rad == 0.0 else float(np.arctan2(x[1], x[0]) % TWO_PI)
            return abs(r - rad), t
        tg = np.linspace(0.0, TWO_PI, seeds, endpoint=False)
        d2 = np.sum((self.point(tg) - x) ** 2, axis=1)
        h = TWO_PI / seeds
        best = (np.inf, 0.0)
        # refine every discrete local minimum; convexity only guarantees
        # uniqueness for points near the boundary
        for i in range(seeds):
            if d2[i] <= d2[i - 1] and d2[i] <= d2[(i + 1) % seeds]:
                t = self._refine_foot(x, tg[i] - h, tg[i] + h, tg[i]) % TWO_PI
                dist = float(np.linalg.norm(self.point(t) - x))
                if dist < best[0] - 1e-14 or (abs(dist - best[0]) <= 1e-14 and t < best[1]):
                    best = (dist, float(t))
        return best

    def distance_to_boundary(self, x) -> tuple[float, float]:
        """Distance from an interior point to the boundary and the foot parameter."""
        x = np.asarray(x, dtype=float)
        if x.shape != (2,):
            raise ValidationError("expected a single planar point")
        if self.contains(x) != INSIDE:
            raise NotInteriorError(f"point {x.tolist()} is not strictly inside the domain")
        return self.closest_point(x)

    def offset_points(self, dist: float, n: int) -> np.ndarray:
        """n equi-parameter points on the inward offset curve at distance ``dist``.

        Valid (the points really are at distance ``dist``) while ``dist`` is below
        the smallest radius of curvature.
        """
        if not 0 < dist * self.max_curvature < 1:
            raise ValidationError(
                f"offset distance {dist} exceeds the minimal radius of curvature"
            )
        t = np.linspace(0.0, TWO_PI, n, endpoint=False)
        return self.point(t) - dist * self.normal(t)

    @property
    def inradius(self) -> float:
        """Largest distance from an interior point to the boundary."""
        if self.kind == "circle":
            return self.params[0]
        if self.kind == "ellipse":
            return min(self.params)

        def neg(x):
            if self.contains(x) != INSIDE:
                return 0.0
            return -self.closest_point(x)[0]

        res = minimize(neg, np.zeros(2), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
        return float(-res.fun)

    def certify(self) -> dict:
        """Numerical checks of the curve invariants on the certification grid."""
        t = np.linspace(0.0, TWO_PI, self.grid, endpoint=False)
        _, g1, _ = self.derivatives(t)
        kappa = self.curvature(t)
        turning = float(np.mean(kappa * np.linalg.norm(g1, axis=1)) * TWO_PI)
        closure = float(np.linalg.norm(self.point(0.0) - self.point(TWO_PI)))
        normal_err = float(np.max(np.abs(np.linalg.norm(self.normal(t), axis=1) - 1.0)))
        return {
            "min_curvature": float(kappa.min()),
            "winding_number": turning / TWO_PI,
            "closure_gap": closure,
            "normal_length_error": normal_err,
        }

    # -- charts ---------------------------------------------------------------

    def local_graph(self, t0: float, half_width: float, tilt: float = 0.0) -> "LocalGraph":
        """Represent the boundary near gamma(t0) as a graph over a line.

        The chart axis is the unit tangent at ``t0`` rotated by ``tilt``; with
        ``tilt = 0`` the slope of psi at the base point vanishes.
        """
        if not half_width > 0:
            raise ValidationError("half_width must be positive")
        base = self.point(t0)
        axis = _rot(self.tangent(t0), tilt)
        inward = _rot(-self.normal(t0), tilt)

        # march outward in t until the chart coordinate covers +-half_width,
        # failing if the curve stops being a graph over the axis first
        step = min(1e-2, half_width / (4 * self.speed(t0)))
        bounds = []
        for sign in (1.0, -1.0):
            ts = [t0]
            while True:
                t_next = ts[-1] + sign * step
                g0, g1, _ = self.derivatives(t_next)
                if np.dot(g1, axis) <= 0:
                    raise ValidationError("chart too wide: boundary is not a graph over the axis")
                ts.append(t_next)
                if abs(np.dot(g0 - base, axis)) >= half_width:
                    break
                if abs(t_next - t0) > np.pi:
                    raise ValidationError("chart too wide: boundary is not a graph over the axis")
            bounds.append(ts[-1])
        t_grid = np.linspace(bounds[1], bounds[0], 2049)
        z_grid = (self.point(t_grid) - base) @ axis
        if np.any(np.diff(z_grid) <= 0):
            raise ValidationError("chart too wide: boundary is not a graph over the axis")
        return LocalGraph(self, float(t0), base, axis, inward, float(half_width), t_grid, z_grid)


@dataclass(frozen=True, eq=False)
class LocalGraph:
    """Boundary patch written as base + z*axis + psi(z)*inward, |z| < half_width."""

    domain: ConvexDomain
    t0: float
    base_point: np.ndarray
    axis: np.ndarray
    inward: np.ndarray
    half_width: float
    _t_grid: np.ndarray = field(repr=False)
    _z_grid: np.ndarray = field(repr=False)

    @property
    def tangent_frame(self) -> tuple[np.ndarray, np.ndarray]:
        return self.axis, self.inward

    def parameter(self, z):
        """Curve parameter t with chart coordinate z (vectorized Newton)."""
        z = np.asarray(z, dtype=float)
        if np.any(np.abs(z) > self.half_width * (1 + 1e-12)):
            raise ValidationError("chart coordinate outside the chart")
        t = np.interp(z, self._z_grid, self._t_grid)
        for _ in range(8):
            g0, g1, _ = self.domain.derivatives(t)
            t = t - ((g0 - self.base_point) @ self.axis - z) / (g1 @ self.axis)
        return t

    def _parts(self, z):
        t = self.parameter(z)
        g0, g1, g2 = self.domain.derivatives(t)
        return g0, g1, g2

    def psi(self, z):
        g0, _, _ = self._parts(z)
        val = (g0 - self.base_point) @ self.inward
        return np.where(np.asarray(z) == 0, 0.0, val)

    def dpsi(self, z):
        _, g1, _ = self._parts(z)
        return (g1 @ self.inward) / (g1 @ self.axis)

    def d2psi(self, z):
        _, g1, g2 = self._parts(z)
        ga, gi = g1 @ self.axis, g1 @ self.inward
        return ((g2 @ self.inward) * ga - gi * (g2 @ self.axis)) / ga**3

    @property
    def psi_grad0(self) -> float:
        return float(self.dpsi(0.0))

    def trace(self, z):
        """Points base + z*axis + psi(z)*inward, which lie on the boundary."""
        z = np.asarray(z, dtype=float)
        return (
            self.base_point
            + z[..., None] * self.axis
            + np.asarray(self.psi(z))[..., None] * self.inward
        )


def parse_domain(spec: str) -> ConvexDomain:
    """Parse ``circle:r``, ``ellipse:a,b`` or ``radial:<json file>``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "circle":
            return ConvexDomain.circle(float(rest or 1.0))
        if kind == "ellipse":
            a, b = (float(v) for v in rest.split(","))
            return ConvexDomain.ellipse(a, b)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"cannot parse domain '{spec}'") from None
    if kind == "radial":
        try:
            raw = json.loads(Path(rest).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read radial profile {rest}: {exc}") from None
        if isinstance(raw, dict):
            return ConvexDomain.radial(raw.get("cos", []), raw.get("sin"))
        if isinstance(raw, list) and all(isinstance(p, list) and len(p) == 2 for p in raw):
            return ConvexDomain.radial([p[0] for p in raw], [p[1] for p in raw])
        raise ValidationError("radial profile must be {'cos': [...], 'sin': [...]} or [[a_k, b_k], ...]")
    raise ValidationError(f"unknown domain '{spec}' (use circle:r, ellipse:a,b or radial:<file>)")
