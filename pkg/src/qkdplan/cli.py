"""Command-line front end.

    qkdplan link-curve --config scenario.toml [--ell-min A --ell-max B --steps N]
    qkdplan optimize   --config scenario.toml
    qkdplan compare    --config scenario.toml
    qkdplan validate   --config scenario.toml [--seed N]

Reports go to stdout (or --out FILE) as JSON (--format json, default for
everything except link-curve) or CSV (--format csv).  Output is
byte-identical for a fixed config and seed.  Exit codes: 0 success,
2 configuration or usage error, 3 infeasible scenario, 4 numerical
failure, 5 validation failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .chain import ChainScenario, chain_optimal_spacing, chain_total_cost
from .config import ScenarioConfig, load_config
from .errors import (
    ConfigError,
    InfeasibleDistanceError,
    NumericalFailureError,
    UnsupportedModelError,
)
from .geometry import (
    dump_geometry,
    estimate_kappa_bb_mc,
    estimate_kappa_loc_mc,
    markov_path,
    sample_poisson,
)
from .linkmodel import LinkModel, binary_entropy, per_bit_cost, rate
from .planar import delta_analytic, delta_monte_carlo, gamma_constant
from .planner import minimum_user_count, recommend
from .square import SquareBackboneScenario, manhattan_hop_sum, square_backbone_cost, square_optimal_cell
from .stochastic import (
    StochasticBackboneScenario,
    kappa_bb_closed_form,
    kappa_bb_quadrature,
    kappa_loc,
    optimal_alpha_bb,
    optimal_scale_ratio,
    stochastic_backbone_cost,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4
EXIT_VALIDATION = 5

_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# subcommand bodies (return plain data; rendering happens in main)
# ---------------------------------------------------------------------------


def cmd_link_curve(
    cfg: ScenarioConfig,
    ell_min: float | None = None,
    ell_max: float | None = None,
    steps: int = 200,
) -> list[dict]:
    """Rate/cost curve rows. Columns: ell_km, rate (units of r0), log10_rate,
    cost_per_bit and cost_per_bit_per_km (units of c_qkd), mark.

    The row nearest the chain-optimal spacing is marked 'opt'; BB84 rows
    where error correction has eaten half the raw key (privacy fraction
    below 1/2, the start of the multi-exponential collapse) are marked
    'drop-off'.
    """
    model, costs = cfg.model, cfg.costs
    lam = model.lambda_qkd
    cutoff = model.cutoff_distance()
    if ell_min is None:
        ell_min = 0.1 * lam
    if ell_max is None:
        ell_max = min(6.0 * lam, 0.98 * cutoff) if math.isfinite(cutoff) else 6.0 * lam
    if steps < 2:
        raise ConfigError("steps must be >= 2")
    if not (0 < ell_min < ell_max):
        raise ConfigError("need 0 < ell_min < ell_max")

    single = ChainScenario(length_l=cfg.scenario.length_l, volume_v=cfg.scenario.volume_v)
    ell_opt, _ = chain_optimal_spacing(model, costs, single)
    grid = np.linspace(ell_min, ell_max, steps)
    opt_row = int(np.argmin(np.abs(grid - ell_opt)))

    rows = []
    for i, ell in enumerate(grid):
        ell = float(ell)
        r = rate(model, ell)
        marks = []
        if i == opt_row:
            marks.append("opt")
        if model.is_bb84:
            p = model.bb84_a + model.bb84_b * math.exp(ell / lam)
            if p >= 0.5 or 1.0 - 2.0 * binary_entropy(p) < 0.5:
                marks.append("drop-off")
        if r > 0.0:
            c = costs.c_qkd / r
            rows.append({
                "ell_km": ell,
                "rate": r,
                "log10_rate": math.log10(r),
                "cost_per_bit": c,
                "cost_per_bit_per_km": c / ell,
                "mark": ";".join(marks),
            })
        else:
            rows.append({
                "ell_km": ell, "rate": 0.0, "log10_rate": None,
                "cost_per_bit": None, "cost_per_bit_per_km": None,
                "mark": ";".join(marks),
            })
    return rows


def cmd_optimize(cfg: ScenarioConfig) -> dict:
    """Optimal spacings with their objective values for all three
    architectures.

    The stochastic entry reports both descriptions of the same optimum:
    alpha_bb_opt_km, the node spacing minimizing the trunk constant, and
    scale_ratio, the minimizing value of the dimensionless ratio
    lambda/alpha_bb (~1.2490 for the exponential model); the two multiply
    to lambda.
    """
    model, costs, sc = cfg.model, cfg.costs, cfg.scenario
    single = ChainScenario(length_l=sc.length_l, volume_v=sc.volume_v)
    ell_opt, chain_cost = chain_optimal_spacing(model, costs, single)

    alpha_sq = square_optimal_cell(model, costs)
    square: dict = {
        "alpha_opt_km": alpha_sq,
        "cost_per_bit_per_km": per_bit_cost(model, costs, alpha_sq) / alpha_sq,
    }
    try:
        # L/alpha_opt is rarely an integer, so the grid rounding warnings
        # are routine here; report them instead of leaking them to stderr
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sq_sc = SquareBackboneScenario(planar=sc, alpha_bb=alpha_sq)
        square["total_cost"] = square_backbone_cost(model, costs, sq_sc, exact=True).total
        if caught:
            square["note"] = "; ".join(str(w.message) for w in caught)
    except ValueError as exc:
        square["total_cost"] = None
        square["note"] = str(exc)

    report = {
        "schema_version": _SCHEMA_VERSION,
        "chain": {"ell_opt_km": ell_opt, "total_cost": chain_cost},
        "square": square,
    }
    try:
        alpha_st = optimal_alpha_bb(model, costs)
        report["stochastic"] = {
            "alpha_bb_opt_km": alpha_st,
            "scale_ratio": optimal_scale_ratio(),
            "kappa_bb_at_opt": kappa_bb_closed_form(model, costs, alpha_st),
        }
    except UnsupportedModelError as exc:
        report["stochastic"] = {"supported": False, "reason": str(exc)}
    return report


def cmd_compare(cfg: ScenarioConfig) -> dict:
    """Architecture recommendation (chains vs square backbone), plus the
    stochastic-backbone breakdown shown for information only (it never
    participates in `chosen`)."""
    model, costs, sc = cfg.model, cfg.costs, cfg.scenario
    rec = recommend(model, costs, sc)
    report = {
        "schema_version": _SCHEMA_VERSION,
        "chosen": rec.chosen,
        "costs": {name: bd.as_dict() for name, bd in rec.costs.items()},
        "sigma_star_per_km2": rec.sigma_star,
        "min_user_count": rec.sigma_star * sc.length_l**2,
        "necessary_condition_holds": rec.necessary_condition_holds,
        "full_inequality_holds": rec.full_inequality_holds,
        "note": rec.note,
    }
    try:
        alpha_bb = cfg.alpha_bb if cfg.alpha_bb is not None else optimal_alpha_bb(model, costs)
        st_sc = StochasticBackboneScenario(planar=sc, alpha_bb=alpha_bb)
        breakdown = stochastic_backbone_cost(model, costs, st_sc)
        report["costs"]["StochasticBackbone"] = breakdown.as_dict()
        report["stochastic_alpha_bb_km"] = alpha_bb
    except (UnsupportedModelError, InfeasibleDistanceError) as exc:
        report["stochastic_note"] = str(exc)
    return report


def cmd_validate(cfg: ScenarioConfig, seed: int | None = None) -> tuple[dict, bool]:
    """Monte-Carlo and quadrature cross-checks; returns (report, all_passed).

    The oracle identities hold for the exponential rate model, so a BB84
    config is validated through its exponential envelope (same r0 and
    lambda); the report says so.
    """
    model, costs, sc = cfg.model, cfg.costs, cfg.scenario
    mc = cfg.mc
    if seed is None:
        seed = mc.seed
    notes = []
    if model.is_bb84:
        model = LinkModel.exponential(r0=model.r0, lambda_qkd=model.lambda_qkd)
        notes.append("BB84 config: oracle checks run on the exponential envelope")
    alpha_bb = cfg.alpha_bb if cfg.alpha_bb is not None else model.lambda_qkd

    checks = []

    def record(name, value, reference, deviation, passed, kind):
        checks.append({
            "check": name, "value": value, "reference": reference,
            "deviation": deviation, "deviation_kind": kind,
            "passed": bool(passed),
        })

    est = delta_monte_carlo(sc, replicas=mc.replicas, seed=seed)
    ref = delta_analytic(sc)
    z = est.z_score(ref)
    record("delta_mc_vs_analytic", est.estimate, ref, z, abs(z) <= 3.0, "z_score")

    est = estimate_kappa_loc_mc(model, costs, alpha_bb, mc.side_in_alpha,
                                seed=seed)
    ref = kappa_loc(model, costs, alpha_bb)
    z = est.z_score(ref)
    record("kappa_loc_mc_vs_quadrature", est.estimate, ref, z, abs(z) <= 3.0, "z_score")

    est = estimate_kappa_bb_mc(model, costs, alpha_bb, mc.side_in_alpha,
                               pairs=mc.pairs, seed=seed)
    ref = kappa_bb_closed_form(model, costs, alpha_bb)
    z = est.z_score(ref)
    record("kappa_bb_mc_vs_closed_form", est.estimate, ref, z, abs(z) <= 3.0, "z_score")

    quad = kappa_bb_quadrature(model, costs, alpha_bb)
    rel = abs(quad - ref) / ref
    record("kappa_bb_quadrature_vs_closed_form", quad, ref, rel, rel <= 1e-6, "rel_error")

    worst = 0.0
    for n in range(1, 13):
        cells = np.arange(n * n)
        xi, yi = cells % n, cells // n
        brute = int(np.sum(np.abs(xi[:, None] - xi[None, :])
                           + np.abs(yi[:, None] - yi[None, :])))
        worst = max(worst, abs(brute - manhattan_hop_sum(n)))
    record("manhattan_hop_sum_brute_force", worst, 0.0, worst, worst == 0, "abs_error")

    rng_nodes = sample_poisson(alpha_bb**-2, 10.0 * alpha_bb, seed)
    gen = np.random.default_rng(seed)
    u, v = gen.uniform(0, 10.0 * alpha_bb, size=(2, 2))
    dump = dump_geometry(rng_nodes, markov_path(rng_nodes, u, v))

    all_passed = all(c["passed"] for c in checks)
    report = {
        "schema_version": _SCHEMA_VERSION,
        "seed": seed,
        "checks": checks,
        "all_passed": all_passed,
        "notes": notes,
        "geometry_dump": dump.splitlines(),
    }
    return report, all_passed


# ---------------------------------------------------------------------------
# rendering and entry point
# ---------------------------------------------------------------------------


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_rows(rows: list[dict]) -> str:
    header = list(rows[0].keys())
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_csv_cell(row[k]) for k in header) + "\n")
    return out.getvalue()


def _render(payload, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if isinstance(payload, list):
        return _render_rows(payload)
    if "checks" in payload:  # validation report
        text = _render_rows(payload["checks"])
        text += "\n" + "\n".join(payload["geometry_dump"]) + "\n"
        return text
    # flatten a nested report into key,value rows
    flat = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k, v in sorted(obj.items()):
                walk(f"{prefix}{k}.", v)
        elif isinstance(obj, list):
            flat.append((prefix.rstrip("."), ";".join(str(x) for x in obj)))
        else:
            flat.append((prefix.rstrip("."), obj))

    walk("", payload)
    out = io.StringIO()
    out.write("key,value\n")
    for key, value in flat:
        out.write(f"{key},{_csv_cell(value)}\n")
    return out.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdplan",
        description="Deployment-cost planning for trusted-repeater QKD networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format):
        p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--format", choices=("csv", "json"), default=default_format)

    p = sub.add_parser("link-curve", help="rate/cost versus distance table")
    common(p, "csv")
    p.add_argument("--ell-min", type=float, help="shortest spacing, km")
    p.add_argument("--ell-max", type=float, help="longest spacing, km")
    p.add_argument("--steps", type=int, default=200)

    common(sub.add_parser("optimize", help="optimal spacings per architecture"), "json")
    common(sub.add_parser("compare", help="architecture recommendation"), "json")
    common(sub.add_parser("validate", help="Monte-Carlo / quadrature cross-checks"), "json")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, mc=replace(cfg.mc, seed=args.seed))
        if args.command == "link-curve":
            payload = cmd_link_curve(cfg, args.ell_min, args.ell_max, args.steps)
            status = EXIT_OK
        elif args.command == "optimize":
            payload = cmd_optimize(cfg)
            status = EXIT_OK
        elif args.command == "compare":
            payload = cmd_compare(cfg)
            status = EXIT_OK
        else:
            payload, ok = cmd_validate(cfg, seed=args.seed)
            status = EXIT_OK if ok else EXIT_VALIDATION
        _emit(_render(payload, args.format), args.out)
        return status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleDistanceError as exc:
        print(f"infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
