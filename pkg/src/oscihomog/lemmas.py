"""Numerical checks of the auxiliary estimates behind the rate theorems.

Each suite returns a list of ``Check`` rows; ``run_all`` concatenates them
for the ``lemmas`` subcommand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import dblquad

from . import oscillatory as osc
from .periodic import FourierData, builtin, multiindex_lower_bound
from .solver import kernel_derivative_check

__all__ = ["Check", "kernel_suite", "multiindex_suite", "decay_suite", "oscillatory_suite",
           "run_all", "SUITES", "kernel_refinement"]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    detail: str


ORDERS = [(a, n - a) for n in range(4) for a in range(n, -1, -1)]


def kernel_refinement(depths=(1e-1, 1e-2, 1e-3), n_y: int = 401, orders=ORDERS):
    """Max of |D^alpha_y P| |x - y|^(1+|alpha|) for x = (1 - depth, 0).

    The y grid on the unit circle is concentrated around (1, 0) at the scale of
    the depth, so each refinement level resolves the near-singular region.
    """
    out = []
    for depth in depths:
        x = np.array([[1.0 - depth, 0.0]])
        near = np.linspace(-50 * depth, 50 * depth, n_y)
        theta = np.concatenate([near, np.linspace(-np.pi, np.pi, n_y, endpoint=False)])
        y = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        out.append(kernel_derivative_check(orders, x, y))
    return np.array(out)


def kernel_suite() -> list[Check]:
    rows = []
    # order 0: (1 - |x|^2) / (2 pi |x - y|) <= 1 / pi
    r = np.concatenate([[0.0], 1 - np.geomspace(1e-1, 1e-3, 9)])
    phi = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    xs = (r[:, None, None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)[None]).reshape(-1, 2)
    theta = np.linspace(0, 2 * np.pi, 2048, endpoint=False)
    ys = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    ys = ys[np.min(np.linalg.norm(xs[:, None] - ys[None], axis=-1), axis=0) >= 1e-3]
    keep = np.min(np.linalg.norm(xs[:, None] - ys[None], axis=-1), axis=1) >= 1e-3
    m0 = kernel_derivative_check([(0, 0)], xs[keep], ys)
    rows.append(Check("kernel", "order-0 product <= 1/pi", m0 <= 1 / np.pi + 1e-6, f"max {m0:.6f}"))

    levels = kernel_refinement()
    growth = float(np.max(levels[1:] / levels[:-1]))
    rows.append(Check("kernel", "orders <= 3 bounded under refinement", growth < 4,
                      f"levels {np.array2string(levels, precision=4)}, max growth {growth:.3f}"))
    center = kernel_derivative_check(ORDERS, [[0.0, 0.0]], ys)
    rows.append(Check("kernel", "finite at the centre", math.isfinite(center), f"max {center:.4f}"))
    return rows


def multiindex_suite(max_freq: int = 20, max_k: int = 4) -> list[Check]:
    positive, invariant = True, True
    worst = math.inf
    rng = range(-max_freq, max_freq + 1)
    for k in range(1, max_k + 1):
        for m1 in rng:
            for m2 in rng:
                if m1 == 0 and m2 == 0:
                    continue
                _, ratio = multiindex_lower_bound((m1, m2), k)
                worst = min(worst, ratio)
                positive &= ratio > 0
                for t in (2, 3):
                    invariant &= multiindex_lower_bound((t * m1, t * m2), k)[1] == ratio
    return [
        Check("multiindex", "ratio positive", bool(positive), f"min ratio {worst:.6f}"),
        Check("multiindex", "ratio scale invariant", bool(invariant), "t in {2, 3}, exact equality"),
    ]


def _quad_l2(g: FourierData, k: int) -> float:
    """Torus L^2 norm of the order-k derivatives by adaptive quadrature."""
    if k == 0:
        f = lambda y, x: abs(g.evaluate(np.array([x, y]))) ** 2  # noqa: E731
    else:
        two_pi_m = 2 * np.pi * g.modes.astype(float)

        def f(y, x):
            ph = np.exp(2j * np.pi * (g.modes @ np.array([x, y])))
            d1 = np.sum(1j * two_pi_m[:, 0] * g.values * ph)
            d2 = np.sum(1j * two_pi_m[:, 1] * g.values * ph)
            return abs(d1) ** 2 + abs(d2) ** 2

    val, _ = dblquad(f, 0, 1, 0, 1, epsabs=1e-13, epsrel=1e-12)
    return math.sqrt(val)


def decay_suite() -> list[Check]:
    g = builtin("decay-p")
    beta = (g.dim - 1) / 2
    s32, s64 = g.decay_sum(beta, 32), g.decay_sum(beta, 64)
    rows = [Check("decay", "Cauchy tail |S(64) - S(32)| < 0.05 S(32)",
                  abs(s64 - s32) < 0.05 * s32, f"S(32) {s32:.6f}, S(64) {s64:.6f}")]
    for name, k in (("cos1", 0), ("cos1", 1), ("cos-cos", 0)):
        gk = builtin(name)
        a, b = gk.sobolev_rhs(k), _quad_l2(gk, k)
        rows.append(Check("decay", f"Parseval {name} k={k}", abs(a - b) < 1e-8,
                          f"{a:.10f} vs quadrature {b:.10f}"))
    return rows


def oscillatory_suite(include_3d: bool = True) -> list[Check]:
    rows = []
    fit = osc.decay_exponent(osc.family("stationary2d"), osc.default_lambda_grid("stationary2d", 8))
    rows.append(Check("oscillatory", "stationary d=2 slope -0.5 +- 0.05",
                      abs(fit.slope + 0.5) <= 0.05, f"slope {fit.slope:.4f}"))
    fit = osc.decay_exponent(osc.family("nonstationary"), osc.default_lambda_grid("nonstationary", 8))
    rows.append(Check("oscillatory", "non-stationary slope <= -3", fit.slope <= -3,
                      f"slope {fit.slope}, partial {fit.partial_slope:.2f}"))
    if include_3d:
        fit = osc.decay_exponent(osc.family("stationary3d"), osc.default_lambda_grid("stationary3d", 6))
        rows.append(Check("oscillatory", "stationary d=3 slope -1.0 +- 0.08",
                          abs(fit.slope + 1.0) <= 0.08, f"slope {fit.slope:.4f}"))
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        q = osc.OscillatoryIntegrand(tuple(rng.uniform(-20, 20, 2)), float(rng.uniform(0.25, 1)),
                                     osc.tilted(float(rng.uniform(-1.5, 1.5))))
        a, b = osc.eval_J(q), osc.eval_J(osc.case3_recenter(q))
        worst = max(worst, abs(a - b))
    rows.append(Check("oscillatory", "recentring preserves J", worst < 1e-10, f"max diff {worst:.2e}"))
    return rows


SUITES = {
    "kernel": kernel_suite,
    "multiindex": multiindex_suite,
    "decay": decay_suite,
    "oscillatory": oscillatory_suite,
}


def run_all(names=None) -> list[Check]:
    rows = []
    for name in names or SUITES:
        rows.extend(SUITES[name]())
    return rows
