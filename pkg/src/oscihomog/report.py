"""Writing and reading rate reports (CSV tables, JSON summary, SVG plots)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .rates import LpValue, RateReport, Record

__all__ = ["emit_report", "load_report", "report_to_dict", "report_from_dict", "FORMATS"]

FORMATS = ("csv", "json", "svg")
FLOAT_FMT = "{:.10e}"
RECORD_COLUMNS = ["kind", "eps", "index", "x1", "x2", "dist", "abs_err"]
LP_COLUMNS = ["p", "eps", "value", "error_bar", "collar"]


def _clean(v):
    """JSON-safe value: NaN and infinities become None."""
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer)):
        return _clean(v.item())
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def _restore(v):
    return math.nan if v is None else v


def report_to_dict(rep: RateReport) -> dict:
    return _clean({
        "domain": rep.domain,
        "g": rep.g,
        "eps_grid": rep.eps_grid,
        "band": rep.band,
        "pointwise_slope": rep.pointwise_slope,
        "kappa_eps": rep.kappa_eps,
        "kappa_hat": rep.kappa_hat,
        "lp_slopes": {repr(float(p)): s for p, s in rep.lp_slopes.items()},
        "constants": rep.constants,
        "min_curvature": rep.min_curvature,
        "settings": rep.settings,
        "seed": rep.seed,
        "records": [[r.eps, r.index, r.x1, r.x2, r.dist, r.abs_err] for r in rep.records],
        "kappa_records": [[r.eps, r.index, r.x1, r.x2, r.dist, r.abs_err] for r in rep.kappa_records],
        "lp_values": [[v.p, v.eps, v.value, v.error_bar, v.collar] for v in rep.lp_values],
    })


def _fit_value(v):
    return math.nan if v is None else v


def report_from_dict(d: dict) -> RateReport:
    def rec(row):
        return Record(float(row[0]), int(row[1]), *(float(_restore(x)) for x in row[2:]))

    return RateReport(
        domain=d["domain"],
        g=d["g"],
        eps_grid=[float(e) for e in d["eps_grid"]],
        band=float(d["band"]),
        records=[rec(r) for r in d["records"]],
        kappa_eps=d.get("kappa_eps"),
        kappa_records=[rec(r) for r in d["kappa_records"]],
        lp_values=[LpValue(*(float(_restore(x)) for x in row)) for row in d["lp_values"]],
        pointwise_slope=_fit_value(d["pointwise_slope"]),
        kappa_hat=d.get("kappa_hat") if d.get("kappa_hat") is None else _fit_value(d["kappa_hat"]),
        lp_slopes={float(p): _fit_value(s) for p, s in d["lp_slopes"].items()},
        constants={k: _fit_value(v) for k, v in d["constants"].items()},
        min_curvature=d.get("min_curvature"),
        settings=d.get("settings", {}),
        seed=int(d.get("seed", 0)),
    )


def load_report(path) -> RateReport:
    try:
        return report_from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed report {path}: {exc}") from None


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return FLOAT_FMT.format(float(v))


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def _record_rows(rep: RateReport):
    for kind, recs in (("band", rep.records), ("kappa", rep.kappa_records)):
        for r in recs:
            yield [kind, r.eps, r.index, r.x1, r.x2, r.dist, r.abs_err]


def _write_svg(rep: RateReport, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "oscihomog"
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))

    ax = axes[0]
    if rep.records:
        eps = np.array(rep.eps_grid)
        max_err = np.array([max(r.abs_err for r in rep.records if r.eps == e) for e in eps])
        ax.loglog(eps, max_err, "o", label=f"max error, d = {rep.band:.3g}")
        c = rep.constants.get("pointwise_C", math.nan)
        if isinstance(rep.pointwise_slope, float) and math.isfinite(rep.pointwise_slope) and math.isfinite(c):
            ax.loglog(eps, c * eps**rep.pointwise_slope, "-",
                      label=f"fit slope {rep.pointwise_slope:.3f}")
        ax.legend()
    ax.set_xlabel("eps")
    ax.set_ylabel("|u_eps - mean g|")

    ax = axes[1]
    if rep.kappa_records:
        dist = np.array(sorted({r.dist for r in rep.kappa_records}))
        err = np.array([max(r.abs_err for r in rep.kappa_records if r.dist == d) for d in dist])
        ax.loglog(dist, err, "o", label=f"eps = {rep.kappa_eps:.3g}")
        if isinstance(rep.kappa_hat, float) and math.isfinite(rep.kappa_hat):
            keep = err > 0
            icpt = np.mean(np.log(err[keep]) - rep.kappa_hat * np.log(1 / dist[keep]))
            ax.loglog(dist, np.exp(icpt) * dist ** (-rep.kappa_hat), "-",
                      label=f"kappa_hat {rep.kappa_hat:.3f}")
        ax.legend()
    ax.set_xlabel("d(x)")

    ax = axes[2]
    for p in sorted({v.p for v in rep.lp_values}):
        sel = [v for v in rep.lp_values if v.p == p]
        eps = np.array([v.eps for v in sel])
        val = np.array([v.value for v in sel])
        (line,) = ax.loglog(eps, val, "o", label=f"p = {p:g}")
        slope = rep.lp_slopes.get(p)
        if isinstance(slope, float) and math.isfinite(slope) and np.all(val > 0):
            icpt = np.mean(np.log(val) - slope * np.log(eps))
            ax.loglog(eps, np.exp(icpt) * eps**slope, "-", color=line.get_color())
    if rep.lp_values:
        ax.legend()
    ax.set_xlabel("eps")
    ax.set_ylabel("L^p norm")

    fig.suptitle(f"{rep.domain}, g = {rep.g}")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_report(rep: RateReport, out_dir, formats=FORMATS) -> list[Path]:
    """Write the requested formats into ``out_dir``; returns the paths written."""
    out = Path(out_dir)
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ValidationError(f"unknown report format(s): {', '.join(bad)}")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out / "records.csv"
        _write_csv(path, RECORD_COLUMNS, _record_rows(rep))
        written.append(path)
        path = out / "lp.csv"
        _write_csv(path, LP_COLUMNS, ([v.p, v.eps, v.value, v.error_bar, v.collar] for v in rep.lp_values))
        written.append(path)
    if "json" in formats:
        path = out / "report.json"
        path.write_text(json.dumps(report_to_dict(rep), indent=2, allow_nan=False) + "\n")
        written.append(path)
    if "svg" in formats:
        path = out / "rates.svg"
        _write_svg(rep, path)
        written.append(path)
    return written
