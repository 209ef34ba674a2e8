"""Command-line entry point: ``oscihomog {solve,rates,oscint,lemmas}``.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oscillatory as osc
from .errors import NumericalError, ValidationError
from .geometry import ConvexDomain, parse_domain
from .lemmas import SUITES, run_all
from .periodic import FourierData, builtin
from .rates import Settings, parse_eps_grid, run_rates, thread_cap
from .report import FORMATS, emit_report
from .solver import DEFAULT_NODE_CAP, evaluate_interior, solve_oscillating

PPW_RANGE = (8, 64)
MAX_NODE_CAP = 2**20
FMT = "{:.10e}"


@dataclass
class RunConfig:
    subcommand: str
    domain: str = "circle:1"
    g: str = "builtin:cos1"
    g_file: str | None = None
    eps_grid: str = "0.1:0.5:6"
    points_per_wavelength: float = 20
    node_cap: int = DEFAULT_NODE_CAP
    out: str | None = None
    seed: int = 0
    threads: int | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        lo, hi = PPW_RANGE
        if not lo <= self.points_per_wavelength <= hi:
            raise ValidationError(f"points_per_wavelength must lie in [{lo}, {hi}]")
        if not 16 <= self.node_cap <= MAX_NODE_CAP:
            raise ValidationError(f"node_cap must lie in [16, {MAX_NODE_CAP}]")
        if self.threads is not None:
            thread_cap(self.threads)

    def settings(self, backend=None) -> Settings:
        return Settings(self.points_per_wavelength, self.node_cap, backend, self.threads)

    def load_domain(self) -> ConvexDomain:
        try:
            return parse_domain(self.domain)
        except ValidationError as exc:
            raise ValidationError(f"domain: {exc}") from None

    def load_g(self) -> FourierData:
        try:
            g = FourierData.from_json(self.g_file) if self.g_file else builtin(self.g)
            if g.dim != 2:
                raise ValidationError("boundary data must be 2-periodic (dim 2)")
            g.check_real()
            return g
        except ValidationError as exc:
            raise ValidationError(f"g: {exc}") from None


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    p.add_argument("--config", help="JSON file whose keys mirror the long flags; flags override it")
    if data:
        p.add_argument("--domain", default="circle:1",
                       help="convex domain: circle:r, ellipse:a,b or radial:<json> (default: %(default)s)")
        p.add_argument("--g", default="builtin:cos1",
                       help="periodic boundary data: builtin:cos1, builtin:cos-cos or builtin:decay-p "
                            "(default: %(default)s)")
        p.add_argument("--g-file", default=None,
                       help="JSON list of {m, re, im} Fourier records; overrides --g (default: none)")
        p.add_argument("--ppw", dest="points_per_wavelength", type=float, default=20,
                       help="boundary nodes per data wavelength, range [8, 64]; sets the solver "
                            "resolution N = max(256, ppw * perimeter * max_freq / eps) (default: %(default)s)")
        p.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP,
                       help="hard cap on boundary nodes, at most 2^20 (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed recorded with the artifacts; sampling is deterministic (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscihomog",
        description="Dirichlet problems with oscillating periodic boundary data g(x/eps): "
                    "solver, convergence-rate sweeps, oscillatory-integral decay and estimate checks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("solve", help="solve with data g(x/eps) and report u_eps at points",
                       description="Harmonic extension of g(x/eps); prints x1,x2,dist,u_eps,u0,abs_err "
                                   "with u0 the mean of g.")
    _common(p)
    p.add_argument("--eps", type=float, default=0.0625, help="oscillation scale in (0, 1] (default: %(default)s)")
    p.add_argument("--points", default=None,
                   help="JSON file with a list of [x1, x2] interior points "
                        "(default: 8 points on the level set d(x) = 0.2 * inradius)")
    p.add_argument("--backend", choices=["disk", "bie"], default=None,
                   help="disk: closed-form Poisson kernel (circles only); bie: double-layer "
                        "integral equation (default: disk for circles, else bie)")
    p.add_argument("--out", default="csv", help="CSV destination: 'csv' or '-' for stdout, else a file path "
                                                "(default: %(default)s)")

    p = sub.add_parser("rates", help="eps sweeps for the pointwise and L^p convergence rates",
                       description="Pointwise error on a fixed-distance level set over an eps grid, "
                                   "distance sweep at the smallest eps (blow-up exponent and split-sample "
                                   "bound check with kappa = 1.1), and L^p norms of u_eps - mean(g).")
    _common(p)
    p.add_argument("--eps-grid", default="0.1:0.5:6",
                   help="start:ratio:count (geometric) or comma list, strictly decreasing (default: %(default)s)")
    p.add_argument("--band", type=float, default=0.2,
                   help="level-set distance as a fraction of the inradius (default: %(default)s)")
    p.add_argument("--p", default="1,2,4",
                   help="comma list of L^p exponents, empty to skip; non-circular domains are much "
                        "slower (default: %(default)s)")
    p.add_argument("--n-points", type=int, default=64, help="points per level set (default: %(default)s)")
    p.add_argument("--n-dist", type=int, default=12,
                   help="distances in the blow-up sweep, 0 to skip it (default: %(default)s)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads over eps values (default: $OSCIHOMOG_THREADS or 1)")
    p.add_argument("--formats", default="csv,json,svg", help="report formats (default: %(default)s)")
    p.add_argument("--out", default="report", help="output directory (default: %(default)s)")

    p = sub.add_parser("oscint", help="decay of the oscillatory chart integral J in rho |xi|",
                       description="Evaluates J over a geometric lambda grid for a built-in family and "
                                   "fits the decay exponent; prints lambda,rho,abs_J,bound_product.")
    _common(p, data=False)
    p.add_argument("--case", choices=list(osc.FAMILIES), default="stationary2d",
                   help="stationary2d: psi = z^2/2, xi = lambda (0, 1); nonstationary: xi = lambda (1, 0.01); "
                        "tilted: psi = z/2 + z^2/2, xi = lambda (-1/2, 1); stationary3d: paraboloid, "
                        "xi = lambda (0, 0, 1); circle: circle chart with rho |xi| = lambda "
                        "(default: %(default)s)")
    p.add_argument("--lambda-min", type=float, default=None, help="smallest lambda (default: 32)")
    p.add_argument("--lambda-max", type=float, default=None,
                   help="largest lambda (default: 4096, or 1024 for stationary3d)")
    p.add_argument("--n-lambda", type=int, default=8, help="grid points, at least 6 (default: %(default)s)")
    p.add_argument("--rho", type=float, default=1.0, help="chart scale rho (default: %(default)s)")
    p.add_argument("--ppw", dest="nodes_per_wavelength", type=float, default=osc.NODES_PER_WAVELENGTH,
                   help="quadrature nodes per phase wavelength, at least 30 (default: %(default)s)")
    p.add_argument("--out", default="csv", help="'csv' or '-' for stdout, else a file path (default: %(default)s)")

    p = sub.add_parser("lemmas", help="run the estimate-check suites and print a PASS/FAIL table",
                       description="Kernel-derivative bound on the disk, multi-index lower bound, "
                                   "coefficient decay sums, oscillatory decay and recentring.")
    _common(p, data=False)
    p.add_argument("--all", action="store_true", help="run every suite (default when no --suite is given)")
    p.add_argument("--suite", action="append", choices=list(SUITES), default=None,
                   help="run only the named suite; repeatable")
    return parser


def _parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ValidationError("config: top level must be a JSON object")
        known = vars(args)
        aliases = {"ppw": "points_per_wavelength"}
        if args.subcommand == "oscint":
            aliases = {"ppw": "nodes_per_wavelength"}
        defaults = {}
        for key, val in cfg.items():
            dest = aliases.get(key, key.replace("-", "_"))
            if dest not in known or dest in ("subcommand", "config"):
                raise ValidationError(f"config: unknown field '{key}'")
            defaults[dest] = val
        sub = parser._subparsers._group_actions[0].choices[args.subcommand]
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _open_out(dest):
    if dest in ("csv", "-", None):
        return sys.stdout, False
    path = Path(dest)
    if path.parent and not path.parent.exists():
        raise ValidationError(f"out: directory {path.parent} does not exist")
    return path.open("w", newline=""), True


def _run_solve(cfg: RunConfig, args) -> int:
    dom = cfg.load_domain()
    g = cfg.load_g()
    if args.points:
        try:
            pts = np.asarray(json.loads(Path(args.points).read_text()), dtype=float)
        except (OSError, ValueError) as exc:
            raise ValidationError(f"points: cannot read {args.points}: {exc}") from None
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValidationError("points: expected a list of [x1, x2] pairs")
    else:
        pts = dom.offset_points(0.2 * dom.inradius, 8)
    sol = solve_oscillating(dom, g, args.eps, backend=args.backend,
                            points_per_wavelength=cfg.points_per_wavelength, node_cap=cfg.node_cap)
    u = np.atleast_1d(evaluate_interior(sol, pts))
    u0 = g.mean().real
    dist = [dom.distance_to_boundary(p)[0] for p in pts]
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "dist", "u_eps", "u0", "abs_err"])
        for p, d, val in zip(pts, dist, u):
            w.writerow([FMT.format(v) for v in (p[0], p[1], d, val, u0, abs(val - u0))])
    finally:
        if close:
            fh.close()
    return 0


def _run_rates(cfg: RunConfig, args) -> int:
    dom = cfg.load_domain()
    g = cfg.load_g()
    try:
        eps = parse_eps_grid(str(args.eps_grid))
    except ValidationError as exc:
        raise ValidationError(f"eps_grid: {exc}") from None
    try:
        ps = [float(v) for v in str(args.p).split(",") if v.strip()]
    except ValueError:
        raise ValidationError(f"p: cannot parse '{args.p}'") from None
    formats = [f.strip() for f in str(args.formats).split(",") if f.strip()]
    if any(f not in FORMATS for f in formats):
        raise ValidationError(f"formats: choose from {', '.join(FORMATS)}")
    if args.n_points < 1:
        raise ValidationError("n_points must be >= 1")
    if args.n_dist < 0 or args.n_dist == 1:
        raise ValidationError("n_dist must be 0 or >= 2")
    rep = run_rates(dom, g, eps, band=args.band, n_points=args.n_points, ps=ps,
                    kappa=args.n_dist > 0, n_dist=max(args.n_dist, 2),
                    settings=cfg.settings(), seed=cfg.seed)
    paths = emit_report(rep, args.out, formats)
    print(f"pointwise slope: {rep.pointwise_slope}")
    if rep.kappa_hat is not None:
        print(f"kappa_hat (eps={rep.kappa_eps:g}): {rep.kappa_hat}")
    for p, s in rep.lp_slopes.items():
        print(f"L^{p:g} slope: {s}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _run_oscint(cfg: RunConfig, args) -> int:
    if args.nodes_per_wavelength < osc.NODES_PER_WAVELENGTH:
        raise ValidationError(f"nodes_per_wavelength must be >= {osc.NODES_PER_WAVELENGTH}")
    if args.n_lambda < 6:
        raise ValidationError("n_lambda must be >= 6")
    if not args.rho > 0:
        raise ValidationError("rho must be positive")
    grid = osc.default_lambda_grid(args.case, args.n_lambda, args.lambda_min, args.lambda_max)
    fit = osc.decay_exponent(osc.family(args.case, args.rho), grid, args.nodes_per_wavelength)
    fh, close = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", "rho", "abs_J", "bound_product"])
        for row in zip(fit.lambdas, fit.rho, fit.abs_J, fit.bound_product):
            w.writerow([FMT.format(v) for v in row])
    finally:
        if close:
            fh.close()
    note = " (|J| reached the 1e-14 floor)" if fit.fast_decay else ""
    print(f"slope {fit.slope:.6g}, r2 {fit.r2:.6g}, partial slope {fit.partial_slope:.6g}{note}",
          file=sys.stderr)
    return 0


def _run_lemmas(cfg: RunConfig, args) -> int:
    rows = run_all(args.suite if args.suite and not args.all else None)
    width = max(len(r.name) for r in rows)
    for r in rows:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.suite:<12} {r.name:<{width}}  {r.detail}")
    ok = all(r.passed for r in rows)
    print(f"{sum(r.passed for r in rows)}/{len(rows)} passed")
    return 0 if ok else 1


RUNNERS = {"solve": _run_solve, "rates": _run_rates, "oscint": _run_oscint, "lemmas": _run_lemmas}


def run(argv=None) -> int:
    try:
        args = _parse(argv)
        cfg = RunConfig(
            subcommand=args.subcommand,
            domain=getattr(args, "domain", "circle:1"),
            g=getattr(args, "g", "builtin:cos1"),
            g_file=getattr(args, "g_file", None),
            eps_grid=str(getattr(args, "eps_grid", "0.1:0.5:6")),
            points_per_wavelength=getattr(args, "points_per_wavelength", 20),
            node_cap=getattr(args, "node_cap", DEFAULT_NODE_CAP),
            out=getattr(args, "out", None),
            seed=args.seed,
            threads=getattr(args, "threads", None),
        )
        cfg.validate()
        return RUNNERS[args.subcommand](cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.hint:
            print(f"hint: {exc.hint}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
