import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest
from scipy.special import j0

from oscihomog.cli import build_parser, run

GOLDEN = Path(__file__).parent / "golden"


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_solve_default(capsys):
    assert run(["solve", "--eps", "0.125"]) == 0
    out = rows(capsys.readouterr().out)
    assert out[0] == ["x1", "x2", "dist", "u_eps", "u0", "abs_err"]
    assert len(out) == 9
    assert all(float(r[2]) == pytest.approx(0.2) for r in out[1:])


def test_solve_points_file(tmp_path, capsys):
    pts = tmp_path / "pts.json"
    pts.write_text("[[0.0, 0.0]]")
    assert run(["solve", "--eps", "0.125", "--points", str(pts)]) == 0
    (row,) = rows(capsys.readouterr().out)[1:]
    # u at the centre is the Bessel value J0(16 pi)
    assert float(row[3]) == pytest.approx(j0(16 * np.pi), abs=1e-9)


@pytest.mark.parametrize(
    "argv, message",
    [
        (["solve", "--domain", "ellipse:1,-2"], "curvature bound not positive"),
        (["solve", "--ppw", "100"], "points_per_wavelength"),
        (["solve", "--node-cap", str(2**21)], "node_cap"),
        (["solve", "--eps", "0"], "eps"),
        (["solve", "--g", "builtin:nope"], "g:"),
        (["rates", "--eps-grid", "0.1,0.2"], "eps_grid"),
        (["rates", "--formats", "xml"], "formats"),
        (["oscint", "--ppw", "10"], "nodes_per_wavelength"),
        (["oscint", "--n-lambda", "3"], "n_lambda"),
    ],
)
def test_validation_exit_2(argv, message, capsys, tmp_path):
    assert run(argv + (["--out", str(tmp_path / "o")] if argv[0] == "rates" else [])) == 2
    assert message in capsys.readouterr().err


def test_numerical_failure_exit_3(capsys):
    assert run(["solve", "--eps", "1e-5"]) == 3
    err = capsys.readouterr().err
    assert "hint:" in err


def test_config_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"eps": 0.125, "domain": "ellipse:1,-2"}))
    assert run(["solve", "--config", str(cfg)]) == 2
    capsys.readouterr()
    assert run(["solve", "--config", str(cfg), "--domain", "circle:1"]) == 0


def test_config_unknown_field(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run(["solve", "--config", str(cfg)]) == 2
    assert "unknown field 'colour'" in capsys.readouterr().err


def test_rates_golden_byte_identical(tmp_path, capsys):
    out = tmp_path / "report"
    assert run(["rates", "--config", str(GOLDEN / "rates_config.json"), "--out", str(out)]) == 0
    for name in ("records.csv", "lp.csv", "report.json"):
        assert (out / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_rates_writes_only_into_out_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    out = tmp_path / "nested" / "report"
    argv = ["rates", "--eps-grid", "0.1:0.5:3", "--n-points", "4", "--n-dist", "0", "--p", "1",
            "--out", str(out)]
    assert run(argv) == 0
    written = {p.relative_to(tmp_path) for p in tmp_path.rglob("*") if p.is_file()}
    assert all(p.parts[:2] == ("nested", "report") for p in written)
    assert {p.name for p in written} == {"records.csv", "lp.csv", "report.json", "rates.svg"}


def test_oscint_csv(tmp_path, capsys):
    out = tmp_path / "j.csv"
    assert run(["oscint", "--case", "stationary2d", "--lambda-max", "1024", "--n-lambda", "6",
                "--out", str(out)]) == 0
    table = rows(out.read_text())
    assert table[0] == ["lambda", "rho", "abs_J", "bound_product"]
    assert len(table) == 7
    assert "slope -0.5" in capsys.readouterr().err


def test_lemmas_single_suite(capsys):
    assert run(["lemmas", "--suite", "multiindex"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out.replace("0 FAIL", "")


@pytest.mark.slow
def test_lemmas_all(capsys):
    assert run(["lemmas", "--all"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert all(line.startswith("PASS") for line in lines[:-1])
    assert {"kernel", "multiindex", "decay", "oscillatory"} <= {line.split()[1] for line in lines[:-1]}


@pytest.mark.parametrize("sub", ["solve", "rates", "oscint", "lemmas"])
def test_help_lists_defaults(sub):
    parser = build_parser()
    sp = parser._subparsers._group_actions[0].choices[sub]
    text = sp.format_help()
    assert "--seed" in text
    for action in sp._actions:
        if action.option_strings and action.dest not in ("help", "config", "all", "suite"):
            assert action.help and "default" in action.help, action.dest
