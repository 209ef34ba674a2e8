"""Convergence-rate experiments for u_eps against the homogenized solution.

The homogenized solution is the constant u0 = mean(g), so every error is
|u_eps(x) - mean(g)|.  Sweeps solve once per eps and reuse the solution for
the fixed-distance band, the distance sweep and the L^p norms.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ValidationError
from .geometry import ConvexDomain
from .periodic import FourierData
from .solver import (
    DEFAULT_NODE_CAP,
    DEFAULT_POINTS_PER_WAVELENGTH,
    BoundarySolution,
    evaluate_interior,
    evaluate_polar,
    solve_oscillating,
)

__all__ = [
    "Settings",
    "Record",
    "LpValue",
    "RateReport",
    "BoundCheck",
    "pointwise_error",
    "sweep_pointwise",
    "fit_kappa",
    "distance_sweep",
    "bound_check",
    "lp_error",
    "lp_errors",
    "lp_sweep",
    "run_rates",
    "fit_slope",
    "parse_eps_grid",
    "default_eps_grid",
    "thread_cap",
]

ERROR_FLOOR = 1e-15
EXACT_TOL = 1e-10
EXACT = "exact"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Settings:
    points_per_wavelength: float = DEFAULT_POINTS_PER_WAVELENGTH
    node_cap: int = DEFAULT_NODE_CAP
    backend: str | None = None
    threads: int | None = None

    def solve(self, dom: ConvexDomain, g: FourierData, eps: float) -> BoundarySolution:
        return solve_oscillating(
            dom, g, eps, backend=self.backend,
            points_per_wavelength=self.points_per_wavelength, node_cap=self.node_cap,
        )


@dataclass(frozen=True)
class Record:
    eps: float
    index: int
    x1: float
    x2: float
    dist: float
    abs_err: float


@dataclass(frozen=True)
class LpValue:
    p: float
    eps: float
    value: float
    error_bar: float
    collar: float


def thread_cap(requested: int | None = None) -> int:
    """Thread count from the argument, else OSCIHOMOG_THREADS, else 1."""
    if requested is None:
        raw = os.environ.get("OSCIHOMOG_THREADS", "1")
        try:
            requested = int(raw)
        except ValueError:
            raise ValidationError(f"OSCIHOMOG_THREADS must be an integer, got '{raw}'") from None
    if requested < 1:
        raise ValidationError("thread count must be >= 1")
    return requested


def _ordered_map(fn: Callable, items: Sequence, threads: int | None):
    """fn over items, results in input order regardless of completion order."""
    n = thread_cap(threads)
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def fit_slope(x, y) -> tuple[float, float]:
    """Slope and intercept of log(y) against log(x), skipping y below the floor."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = y > ERROR_FLOOR
    if keep.sum() < 2:
        return math.nan, math.nan
    slope, icpt = np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)
    return float(slope), float(icpt)


def default_eps_grid() -> np.ndarray:
    return 0.1 * 0.5 ** np.arange(6)


def parse_eps_grid(spec: str) -> np.ndarray:
    """``start:ratio:count`` (geometric) or a comma list, strictly decreasing."""
    try:
        if ":" in spec:
            start, ratio, count = spec.split(":")
            grid = float(start) * float(ratio) ** np.arange(int(count))
        else:
            grid = np.array([float(v) for v in spec.split(",")])
    except ValueError:
        raise ValidationError(f"eps grid: cannot parse '{spec}'") from None
    _check_eps_grid(grid)
    return grid


def _check_eps_grid(grid) -> None:
    grid = np.asarray(grid, dtype=float)
    if grid.size < 1 or np.any(~np.isfinite(grid)) or np.any(grid <= 0) or np.any(grid > 1):
        raise ValidationError("eps grid: values must lie in (0, 1]")
    if np.any(np.diff(grid) >= 0):
        raise ValidationError("eps grid: values must be strictly decreasing")


# ---------------------------------------------------------------------------
# pointwise errors
# ---------------------------------------------------------------------------

def pointwise_error(dom: ConvexDomain, g: FourierData, eps: float, x,
                    settings: Settings = Settings()):
    sol = settings.solve(dom, g, eps)
    return np.abs(evaluate_interior(sol, x) - g.mean().real)


def _level_records(sol, g, eps, dist, n_points) -> list[Record]:
    pts = sol.domain.offset_points(dist, n_points)
    err = np.abs(evaluate_interior(sol, pts) - g.mean().real)
    return [Record(float(eps), i, float(p[0]), float(p[1]), float(dist), float(e))
            for i, (p, e) in enumerate(zip(pts, err))]


@dataclass
class PointwiseSweep:
    eps_grid: np.ndarray
    dist: float
    records: list
    max_err: np.ndarray
    slope: float | str
    constant: float
    resolution: list


def _pointwise_fit(eps_grid, max_err):
    if np.all(max_err < EXACT_TOL):
        return EXACT, math.nan
    slope, icpt = fit_slope(eps_grid, max_err)
    return slope, math.exp(icpt) if math.isfinite(icpt) else math.nan


def sweep_pointwise(dom: ConvexDomain, g: FourierData, eps_grid, dist_band=None,
                    n_points: int = 64, settings: Settings = Settings()) -> PointwiseSweep:
    """Max error on the level set d(x) = mid(band) for each eps and its log-log slope.

    ``dist_band`` is a pair (d_min, d_max) or a single distance; the default
    is 0.2 * inradius.
    """
    eps_grid = np.asarray(eps_grid, dtype=float)
    _check_eps_grid(eps_grid)
    dist = _band_mid(dom, dist_band)

    def cell(eps):
        sol = settings.solve(dom, g, eps)
        return _level_records(sol, g, eps, dist, n_points), sol.resolution

    out = _ordered_map(cell, list(eps_grid), settings.threads)
    records = [r for recs, _ in out for r in recs]
    max_err = np.array([max(r.abs_err for r in recs) for recs, _ in out])
    slope, const = _pointwise_fit(eps_grid, max_err)
    return PointwiseSweep(eps_grid, dist, records, max_err, slope, const, [n for _, n in out])


def _band_mid(dom, band) -> float:
    if band is None:
        return 0.2 * dom.inradius
    if np.ndim(band) == 0:
        d = float(band)
    else:
        lo, hi = (float(v) for v in band)
        if not 0 < lo <= hi:
            raise ValidationError("distance band needs 0 < d_min <= d_max")
        d = 0.5 * (lo + hi)
    if not d > 0:
        raise ValidationError("distance band must be positive")
    return d


# ---------------------------------------------------------------------------
# distance blow-up
# ---------------------------------------------------------------------------

def default_dist_grid(dom: ConvexDomain, eps: float, n: int = 12) -> np.ndarray:
    return np.geomspace(2 * eps, 0.5 * dom.inradius, n)


def _check_dist_grid(dom, eps, grid):
    grid = np.asarray(grid, dtype=float)
    lo, hi = 2 * eps, 0.5 * dom.inradius
    if grid.size < 2 or grid.min() < lo * (1 - 1e-12) or grid.max() > hi * (1 + 1e-12):
        raise ValidationError(f"dist grid must lie within [{lo:g}, {hi:g}]")
    return grid


@dataclass
class KappaFit:
    eps: float
    dist_grid: np.ndarray
    records: list
    max_err: np.ndarray
    kappa_hat: float | str


def _kappa_from(records, dist_grid):
    max_err = np.array([max((r.abs_err for r in records if r.dist == d), default=0.0)
                        for d in dist_grid])
    # roundoff-level errors carry no distance dependence
    if np.all(max_err < EXACT_TOL):
        return max_err, DEGENERATE
    slope, _ = fit_slope(1.0 / dist_grid, max_err)
    return max_err, (slope if math.isfinite(slope) else DEGENERATE)


def fit_kappa(dom: ConvexDomain, g: FourierData, eps: float, dist_grid=None,
              n_points: int = 64, settings: Settings = Settings(),
              solution: BoundarySolution | None = None) -> KappaFit:
    """Slope of log(max err) against -log d(x) at fixed eps."""
    dist_grid = default_dist_grid(dom, eps) if dist_grid is None else dist_grid
    dist_grid = _check_dist_grid(dom, eps, dist_grid)
    sol = solution if solution is not None else settings.solve(dom, g, eps)
    records = [r for d in dist_grid for r in _level_records(sol, g, eps, float(d), n_points)]
    max_err, kappa = _kappa_from(records, dist_grid)
    return KappaFit(float(eps), dist_grid, records, max_err, kappa)


def distance_sweep(dom: ConvexDomain, g: FourierData, eps_list, n_dist: int = 12,
                   n_points: int = 64, settings: Settings = Settings()) -> list:
    """fit_kappa at several eps with the default geometric distance grid."""
    return _ordered_map(
        lambda eps: fit_kappa(dom, g, eps, default_dist_grid(dom, eps, n_dist), n_points, settings),
        [float(e) for e in eps_list], settings.threads,
    )


@dataclass
class BoundCheck:
    """err <= C eps^(1/2) d^(-kappa), with C fitted on the far records."""

    kappa: float
    split: float
    constant: float
    max_ratio: float
    n_train: int
    n_test: int
    worst: Record | None

    @property
    def holds(self) -> bool:
        return self.n_test > 0 and self.max_ratio <= 1.0


def bound_check(records: Sequence[Record], kappa: float = 1.1, split: float | None = 0.2,
                exponent: float = 0.5) -> BoundCheck:
    """Split-sample check of the pointwise bound.

    C is the smallest constant valid on the training records (d >= split, or
    the larger-d half when split is None); the held-out records are those
    with d <= split (resp. the smaller-d half).
    """
    recs = list(records)
    if not recs:
        raise ValidationError("bound check needs records")
    d = np.array([r.dist for r in recs])
    if split is None:
        order = np.argsort(-d, kind="stable")
        train_idx, test_idx = order[: len(recs) // 2], order[len(recs) // 2:]
        split = float(np.min(d[train_idx]))
    else:
        train_idx = np.flatnonzero(d >= split)
        test_idx = np.flatnonzero(d <= split)
    if train_idx.size == 0:
        raise ValidationError("no training records above the split")
    scale = np.array([r.eps**exponent * r.dist ** (-kappa) for r in recs])
    err = np.array([r.abs_err for r in recs])
    c = float(np.max(err[train_idx] / scale[train_idx]))
    if test_idx.size == 0 or c == 0:
        return BoundCheck(kappa, split, c, math.nan if c == 0 else 0.0, train_idx.size, test_idx.size, None)
    ratio = err[test_idx] / (c * scale[test_idx])
    k = int(np.argmax(ratio))
    return BoundCheck(kappa, float(split), c, float(ratio[k]), train_idx.size, test_idx.size,
                      recs[int(test_idx[k])])


# ---------------------------------------------------------------------------
# L^p norms
# ---------------------------------------------------------------------------

RADIAL_ORDER = 16


def _radial_rule(delta_c: float, order: int, stop: float | None = None):
    """Gauss-Legendre nodes in delta = 1 - sigma on [delta_c, 1], panels halving toward 0.

    With delta_c = 0 the halving stops at ``stop`` and a last panel reaches 0.
    """
    floor = delta_c if delta_c > 0 else stop
    edges = [1.0, 0.5]
    while edges[-1] / 2 > floor:
        edges.append(edges[-1] / 2)
    if delta_c > 0:
        edges.append(delta_c)
    else:
        edges += [floor, 0.0]
    edges = np.array(edges)
    x, w = np.polynomial.legendre.leggauss(order)
    hi, lo = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    delta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weight = (half[:, None] * w[None, :]).ravel()
    return delta, weight


def _support_min(dom: ConvexDomain) -> float:
    t = np.linspace(0.0, 2 * np.pi, dom.grid, endpoint=False)
    return float(np.min(np.sum(dom.point(t) * dom.normal(t), axis=1)))


def lp_error(dom: ConvexDomain, g: FourierData, eps: float, p: float,
             settings: Settings = Settings(), solution: BoundarySolution | None = None,
             refine: int = 1) -> LpValue:
    """(int_D |u_eps - mean g|^p)^(1/p), plus an error bar for any skipped collar.

    Disk backend: the polar FFT evaluation is the exact harmonic extension of
    the sampled data, accurate up to the boundary, so the whole disk is
    integrated and the error bar is 0.

    Other backends: points x = sigma * gamma(t) with 1 - sigma >= w / h_min
    keep d(x) >= w, where w = max(2 eps, 10 perimeter / N) and h_min is the
    smallest support value of the domain about the origin.  The collar left
    out has area |D| (1 - sigma_c^2); with sup |u - mean g| <= sum_{m != 0}
    |c_m| (maximum principle) it adds at most that bound to the p-th power
    integral, which is reported as ``error_bar`` on the norm.

    ``refine`` multiplies the radial order and tangential node counts.
    """
    return lp_errors(dom, g, eps, [p], settings, solution, refine)[0]


def lp_errors(dom: ConvexDomain, g: FourierData, eps: float, ps: Sequence[float],
              settings: Settings = Settings(), solution: BoundarySolution | None = None,
              refine: int = 1) -> list[LpValue]:
    """lp_error for several p from a single set of interior evaluations."""
    ps = [float(p) for p in ps]
    if any(not (p >= 1 and math.isfinite(p)) for p in ps):
        raise ValidationError("p must satisfy 1 <= p < inf")
    sol = solution if solution is not None else settings.solve(dom, g, eps)
    gbar = g.mean().real
    sup = float(np.sum(np.abs(g.values[np.any(g.modes != 0, axis=1)])))
    n = sol.resolution
    h_min = _support_min(dom)
    collar = 0.0 if sol.backend == "disk" else max(2 * eps, 10 * dom.perimeter / n)
    delta_c = collar / h_min
    if delta_c >= 1:
        raise ValidationError("collar covers the whole domain; eps too large for an L^p estimate")
    delta, wd = _radial_rule(delta_c, RADIAL_ORDER * refine, stop=eps / (8 * h_min))
    sigma = 1.0 - delta
    core = np.zeros(len(ps))

    if sol.backend == "disk":
        r = dom.params[0]
        dev = np.abs(evaluate_polar(sol, sigma * r) - gbar)  # rows: radius, cols: angle
        for i, p in enumerate(ps):
            ang = np.mean(dev**p, axis=1) * 2 * np.pi
            core[i] = np.sum(wd * ang * sigma * r * r)
    else:
        for s, w in zip(sigma, wd):
            # tangential band limit of u at depth d: modes decay like exp(-k d)
            depth = (1.0 - s) * h_min
            nt = min(n, max(64, 2 * math.ceil(12 * refine * dom.perimeter / depth)))
            t = np.linspace(0.0, 2 * np.pi, nt, endpoint=False)
            gam, g1, _ = dom.derivatives(t)
            jac = gam[:, 0] * g1[:, 1] - gam[:, 1] * g1[:, 0]  # gamma x gamma'
            dev = np.abs(evaluate_interior(sol, s * gam, check=False) - gbar)
            for i, p in enumerate(ps):
                core[i] += w * s * np.mean(dev**p * jac) * 2 * np.pi
    collar_area = dom.area * (1.0 - (1.0 - delta_c) ** 2)
    out = []
    for p, c in zip(ps, core):
        value = c ** (1.0 / p)
        bar = (c + sup**p * collar_area) ** (1.0 / p) - value
        out.append(LpValue(p, float(eps), float(value), float(bar), float(collar)))
    return out


def lp_sweep(dom, g, eps_grid, ps=(1, 2, 4), settings: Settings = Settings()):
    """L^p values for every (eps, p); one solve per eps."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    _check_eps_grid(eps_grid)

    def cell(eps):
        sol = settings.solve(dom, g, eps)
        return lp_errors(dom, g, eps, ps, solution=sol)

    rows = _ordered_map(cell, list(eps_grid), settings.threads)
    values = [v for row in rows for v in row]
    return values, _lp_slopes(values, ps)


def _lp_slopes(values, ps) -> dict:
    out = {}
    for p in ps:
        sel = [v for v in values if v.p == float(p)]
        vals = np.array([v.value for v in sel])
        if sel and np.all(vals < EXACT_TOL):
            out[float(p)] = EXACT
        else:
            out[float(p)] = fit_slope([v.eps for v in sel], vals)[0]
    return out


# ---------------------------------------------------------------------------
# full report
# ---------------------------------------------------------------------------

@dataclass
class RateReport:
    domain: str
    g: str
    eps_grid: list
    band: float
    records: list = field(default_factory=list)
    kappa_eps: float | None = None
    kappa_records: list = field(default_factory=list)
    lp_values: list = field(default_factory=list)
    pointwise_slope: float | str | None = None
    kappa_hat: float | str | None = None
    lp_slopes: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    min_curvature: float | None = None
    settings: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        for r in self.records + self.kappa_records:
            if not (r.abs_err >= 0 and r.dist > 0):
                raise ValidationError("records need abs_err >= 0 and dist > 0")
        if self.eps_grid:
            _check_eps_grid(self.eps_grid)


def run_rates(dom: ConvexDomain, g: FourierData, eps_grid=None, band: float = 0.2,
              n_points: int = 64, ps: Sequence[float] = (1, 2, 4), kappa: bool = True,
              n_dist: int = 12, settings: Settings = Settings(), seed: int = 0) -> RateReport:
    """Pointwise band sweep, distance sweep at the smallest eps and L^p norms.

    ``band`` is the level-set distance as a fraction of the inradius.
    """
    eps_grid = default_eps_grid() if eps_grid is None else np.asarray(eps_grid, dtype=float)
    _check_eps_grid(eps_grid)
    if not 0 < band < 1:
        raise ValidationError("band must be a fraction of the inradius in (0, 1)")
    dist = band * dom.inradius
    dom.offset_points(dist, 1)  # validates dist against the curvature radius
    eps_k = float(eps_grid[-1])
    dist_grid = default_dist_grid(dom, eps_k, n_dist) if kappa else None

    def cell(eps):
        sol = settings.solve(dom, g, eps)
        recs = _level_records(sol, g, eps, dist, n_points)
        lp = lp_errors(dom, g, eps, ps, solution=sol) if ps else []
        krecs = []
        if kappa and eps == eps_k:
            krecs = fit_kappa(dom, g, eps, dist_grid, n_points, solution=sol).records
        return recs, lp, krecs, sol.resolution

    out = _ordered_map(cell, [float(e) for e in eps_grid], settings.threads)
    records = [r for o in out for r in o[0]]
    lp_values = [v for o in out for v in o[1]]
    kappa_records = [r for o in out for r in o[2]]

    max_err = np.array([max(r.abs_err for r in o[0]) for o in out])
    slope, const = _pointwise_fit(eps_grid, max_err)
    constants = {"pointwise_C": const}
    kappa_hat = None
    if kappa:
        _, kappa_hat = _kappa_from(kappa_records, dist_grid)
        if kappa_hat != DEGENERATE:
            chk = bound_check(kappa_records, 1.1, 0.2 * dom.inradius)
            constants["bound_C_kappa_1.1"] = chk.constant
            constants["bound_max_heldout_ratio"] = chk.max_ratio
    return RateReport(
        domain=dom.descriptor,
        g=g.name,
        eps_grid=[float(e) for e in eps_grid],
        band=float(dist),
        records=records,
        kappa_eps=eps_k if kappa else None,
        kappa_records=kappa_records,
        lp_values=lp_values,
        pointwise_slope=slope,
        kappa_hat=kappa_hat,
        lp_slopes=_lp_slopes(lp_values, ps),
        constants=constants,
        min_curvature=float(dom.min_curvature),
        settings={
            "points_per_wavelength": settings.points_per_wavelength,
            "node_cap": settings.node_cap,
            "backend": settings.backend or ("disk" if dom.kind == "circle" else "bie"),
            "n_points": n_points,
            "n_dist": n_dist if kappa else 0,
            "p": [float(p) for p in ps],
            "resolution": [o[3] for o in out],
        },
        seed=seed,
    )
