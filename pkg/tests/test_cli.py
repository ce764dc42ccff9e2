"""Command-line interface: subcommands, formats, exit codes, determinism."""

from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest

import qkdplan.cli as cli
from qkdplan.errors import NumericalFailureError

EXP_CONFIG = """
[link]
variant = "exponential"
r0 = 1.0
lambda_qkd = 19.740658268329625

[costs]
c_qkd = 1.0
c_node = 0.0

[scenario]
length_l = 200.0
alpha_u = 10.0
volume_v = 1.0

[mc]
replicas = 50
pairs = 150
side_in_alpha = 10.0
"""

BB84_CONFIG = EXP_CONFIG.replace(
    'variant = "exponential"', 'variant = "bb84"\na = 0.02\nb = 0.01'
)

DEAD_BB84_CONFIG = EXP_CONFIG.replace(
    'variant = "exponential"', 'variant = "bb84"\na = 0.2\nb = 0.01'
)


@pytest.fixture
def config_file(tmp_path):
    def write(text, name="scenario.toml"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


def _run(argv, out_path=None):
    """Invoke main() in-process; return (exit_code, parsed or raw output)."""
    code = cli.main(argv + (["--out", str(out_path)] if out_path else []))
    if out_path is None:
        return code, None
    text = out_path.read_text(encoding="utf-8")
    return code, text


# ---------------------------------------------------------------------------
# exit codes


def test_optimize_exits_zero(config_file, tmp_path):
    out = tmp_path / "r.json"
    code, text = _run(["optimize", "--config", config_file(EXP_CONFIG)], out)
    assert code == cli.EXIT_OK
    assert json.loads(text)["schema_version"] == 1


def test_config_errors_exit_two(config_file, capsys):
    bad = config_file(EXP_CONFIG + "\n[grid]\nn = 4\n", "bad.toml")
    assert cli.main(["optimize", "--config", bad]) == cli.EXIT_CONFIG
    assert "config error" in capsys.readouterr().err
    missing = config_file(EXP_CONFIG.replace("[costs]\nc_qkd = 1.0\nc_node = 0.0", ""))
    assert cli.main(["optimize", "--config", missing]) == cli.EXIT_CONFIG
    good = config_file(EXP_CONFIG)
    assert cli.main(["link-curve", "--config", good, "--steps", "1"]) == cli.EXIT_CONFIG
    assert (
        cli.main(["link-curve", "--config", good, "--ell-min", "9", "--ell-max", "3"])
        == cli.EXIT_CONFIG
    )


def test_dead_bb84_exits_three(config_file, capsys):
    path = config_file(DEAD_BB84_CONFIG)
    assert cli.main(["optimize", "--config", path]) == cli.EXIT_INFEASIBLE
    assert "infeasible" in capsys.readouterr().err


def test_numerical_failure_exits_four(config_file, capsys, monkeypatch):
    def explode(*args, **kwargs):
        raise NumericalFailureError("synthetic non-convergence", best_estimate=1.0)

    monkeypatch.setattr(cli, "square_optimal_cell", explode)
    assert cli.main(["optimize", "--config", config_file(EXP_CONFIG)]) == cli.EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_failed_validation_exits_five(config_file, tmp_path, monkeypatch):
    # a skewed quadrature reference pushes the z-score far out of band
    monkeypatch.setattr(cli, "kappa_loc", lambda *a, **k: 999.0)
    out = tmp_path / "v.json"
    code, text = _run(["validate", "--config", config_file(EXP_CONFIG)], out)
    assert code == cli.EXIT_VALIDATION
    report = json.loads(text)
    assert report["all_passed"] is False
    failed = [c for c in report["checks"] if not c["passed"]]
    assert any(c["check"] == "kappa_loc_mc_vs_quadrature" for c in failed)


# ---------------------------------------------------------------------------
# link-curve


def _curve_rows(config_file, tmp_path, text=EXP_CONFIG, extra=()):
    out = tmp_path / "curve.csv"
    code, raw = _run(["link-curve", "--config", config_file(text), *extra], out)
    assert code == cli.EXIT_OK
    lines = raw.strip().split("\n")
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


def test_link_curve_exponential(config_file, tmp_path):
    header, rows = _curve_rows(config_file, tmp_path)
    assert header == ["ell_km", "rate", "log10_rate", "cost_per_bit",
                      "cost_per_bit_per_km", "mark"]
    assert len(rows) == 200
    # log10 rate is affine in distance for the exponential model
    xs = np.array([float(r["ell_km"]) for r in rows])
    ys = np.array([float(r["log10_rate"]) for r in rows])
    slope, intercept = np.polyfit(xs, ys, 1)
    assert np.max(np.abs(ys - (slope * xs + intercept))) < 1e-9
    assert slope == pytest.approx(-1.0 / (19.740658268329625 * math.log(10.0)), rel=1e-9)
    # free relays: the optimum marker sits nearest lambda
    marked = [r for r in rows if "opt" in r["mark"]]
    assert len(marked) == 1
    lam = 19.740658268329625
    assert abs(float(marked[0]["ell_km"]) - lam) <= (xs[1] - xs[0])


def test_link_curve_two_steps_hits_endpoints(config_file, tmp_path):
    _, rows = _curve_rows(
        config_file, tmp_path, extra=["--ell-min", "5.0", "--ell-max", "25.0", "--steps", "2"]
    )
    assert len(rows) == 2
    assert float(rows[0]["ell_km"]) == 5.0
    assert float(rows[1]["ell_km"]) == 25.0


def test_link_curve_bb84_drop_off(config_file, tmp_path):
    from qkdplan.linkmodel import LinkModel

    cutoff = LinkModel.bb84(1.0, 19.740658268329625, 0.02, 0.01).cutoff_distance()
    _, rows = _curve_rows(
        config_file,
        tmp_path,
        text=BB84_CONFIG,
        extra=["--ell-max", repr(1.2 * cutoff)],
    )
    drop = [("drop-off" in r["mark"]) for r in rows]
    assert any(drop)
    # the collapse region is a suffix: once entered, never left
    first = drop.index(True)
    assert all(drop[first:])
    # rows past the cutoff have no finite rate or cost
    dead = [r for r in rows if float(r["ell_km"]) > cutoff]
    assert dead and all(r["rate"] == "0.0" and r["cost_per_bit"] == "" for r in dead)


# ---------------------------------------------------------------------------
# optimize


def test_optimize_free_relays(config_file, tmp_path):
    out = tmp_path / "opt.json"
    code, text = _run(["optimize", "--config", config_file(EXP_CONFIG)], out)
    assert code == cli.EXIT_OK
    report = json.loads(text)
    lam = 19.740658268329625
    assert report["chain"]["ell_opt_km"] == pytest.approx(lam, rel=1e-12)
    assert report["square"]["alpha_opt_km"] == pytest.approx(lam, rel=1e-12)
    st = report["stochastic"]
    assert st["scale_ratio"] == pytest.approx(1.2490, abs=1e-3)
    assert st["alpha_bb_opt_km"] * st["scale_ratio"] == pytest.approx(lam, rel=1e-3)
    assert st["kappa_bb_at_opt"] > 0.0


def test_optimize_bb84_has_no_stochastic_closed_form(config_file, tmp_path):
    out = tmp_path / "opt.json"
    code, text = _run(["optimize", "--config", config_file(BB84_CONFIG)], out)
    assert code == cli.EXIT_OK
    st = json.loads(text)["stochastic"]
    assert st["supported"] is False
    assert "exponential" in st["reason"]


# ---------------------------------------------------------------------------
# compare


def test_compare_report_fields(config_file, tmp_path):
    out = tmp_path / "cmp.json"
    code, text = _run(["compare", "--config", config_file(EXP_CONFIG)], out)
    assert code == cli.EXIT_OK
    report = json.loads(text)
    assert report["chosen"] in ("LinearChains", "SquareBackbone")
    assert report["chosen"] in report["costs"]
    assert "StochasticBackbone" in report["costs"]
    assert report["min_user_count"] == pytest.approx(
        report["sigma_star_per_km2"] * 200.0**2, rel=1e-12
    )
    for br in report["costs"].values():
        assert set(br) == {"local", "backbone", "nodes", "total"}


def test_compare_bb84_stochastic_note(config_file, tmp_path):
    out = tmp_path / "cmp.json"
    code, text = _run(["compare", "--config", config_file(BB84_CONFIG)], out)
    assert code == cli.EXIT_OK
    report = json.loads(text)
    assert "StochasticBackbone" not in report["costs"]
    assert "stochastic_note" in report


def test_compare_respects_alpha_bb_override(config_file, tmp_path):
    out = tmp_path / "cmp.json"
    override = EXP_CONFIG + "\n[backbone]\nalpha_bb = 12.0\n"
    code, text = _run(["compare", "--config", config_file(override)], out)
    assert code == cli.EXIT_OK
    assert json.loads(text)["stochastic_alpha_bb_km"] == 12.0


# ---------------------------------------------------------------------------
# validate


def test_validate_passes_and_is_deterministic(config_file, tmp_path):
    path = config_file(EXP_CONFIG)
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    code_a, text_a = _run(["validate", "--config", path], out_a)
    code_b, text_b = _run(["validate", "--config", path], out_b)
    assert code_a == code_b == cli.EXIT_OK
    assert text_a == text_b  # byte-identical for a fixed seed
    report = json.loads(text_a)
    assert report["all_passed"] is True
    names = [c["check"] for c in report["checks"]]
    assert names == [
        "delta_mc_vs_analytic",
        "kappa_loc_mc_vs_quadrature",
        "kappa_bb_mc_vs_closed_form",
        "kappa_bb_quadrature_vs_closed_form",
        "manhattan_hop_sum_brute_force",
    ]
    assert any(line.startswith("path ") for line in report["geometry_dump"])


def test_validate_seed_override_changes_draws(config_file, tmp_path):
    path = config_file(EXP_CONFIG)
    out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
    _run(["validate", "--config", path], out_a)
    _run(["validate", "--config", path, "--seed", "1"], out_b)
    rep_a = json.loads(out_a.read_text())
    rep_b = json.loads(out_b.read_text())
    assert rep_a["seed"] == 0 and rep_b["seed"] == 1
    assert rep_a["checks"][0]["value"] != rep_b["checks"][0]["value"]


def test_validate_csv_format(config_file, tmp_path):
    out = tmp_path / "v.csv"
    code, text = _run(
        ["validate", "--config", config_file(EXP_CONFIG), "--format", "csv"], out
    )
    assert code == cli.EXIT_OK
    lines = text.split("\n")
    assert lines[0] == "check,value,reference,deviation,deviation_kind,passed"
    assert sum(1 for l in lines if l.startswith("node ")) > 0
    assert sum(1 for l in lines if l.startswith("path ")) == 1


def test_validate_bb84_uses_envelope(config_file, tmp_path):
    out = tmp_path / "v.json"
    code, text = _run(["validate", "--config", config_file(BB84_CONFIG)], out)
    assert code == cli.EXIT_OK
    report = json.loads(text)
    assert any("envelope" in note for note in report["notes"])


# ---------------------------------------------------------------------------
# optimize as csv, and the installed entry point


def test_optimize_csv_flattens(config_file, tmp_path):
    out = tmp_path / "opt.csv"
    code, text = _run(
        ["optimize", "--config", config_file(EXP_CONFIG), "--format", "csv"], out
    )
    assert code == cli.EXIT_OK
    lines = text.strip().split("\n")
    assert lines[0] == "key,value"
    keys = {line.split(",", 1)[0] for line in lines[1:]}
    assert "chain.ell_opt_km" in keys
    assert "stochastic.scale_ratio" in keys


def test_console_script_runs(config_file):
    proc = subprocess.run(
        [sys.executable, "-c",
         "import sys; from qkdplan.cli import main; sys.exit(main(sys.argv[1:]))",
         "optimize", "--config", config_file(EXP_CONFIG)],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["schema_version"] == 1
