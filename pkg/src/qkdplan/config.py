"""Scenario configuration files.

One TOML document describes a planning scenario:

    [link]
    variant = "exponential"      # or "bb84" (then keys a, b are required)
    r0 = 1.0                     # key rate at zero distance
    lambda_qkd = 19.7            # scaling length, km; exactly one of this
                                 # and [link.attenuation] must be present
    [link.attenuation]           # derive lambda from fibre parameters
    alpha_db_per_km = 0.22
    r_exponent = 1.0
    eta_d = 0.1
    p_d = 1e-7

    [costs]
    c_qkd = 1.0                  # cost of one QKD device pair
    c_node = 0.0                 # cost of one trusted-node site

    [scenario]
    length_l = 100.0             # region side, km
    alpha_u = 5.0                # mean user spacing, km
    volume_v = 1.0               # secret-bit volume per user pair

    [backbone]                   # optional
    alpha_bb = 10.0              # overrides the optimized node spacing

    [mc]                         # optional Monte-Carlo settings
    replicas = 2000
    pairs = 10000
    seed = 0
    side_in_alpha = 20.0

Unknown keys anywhere are rejected, with the offending dotted path in the
error.  Parsing and emission round-trip: emit(parse(text)) parses back to
an equal ScenarioConfig.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import tomli

from .errors import ConfigError
from .linkmodel import AttenuationSpec, CostParams, LinkModel, lambda_from_attenuation
from .planar import PlanarScenario

__all__ = ["McSettings", "ScenarioConfig", "parse_config", "load_config", "emit_config"]


@dataclass(frozen=True)
class McSettings:
    replicas: int = 2000
    pairs: int = 10_000
    seed: int = 0
    side_in_alpha: float = 20.0

    def __post_init__(self):
        if self.replicas < 2:
            raise ValueError("mc.replicas must be >= 2")
        if self.pairs < 100:
            raise ValueError("mc.pairs must be >= 100")
        if self.side_in_alpha < 10.0:
            raise ValueError("mc.side_in_alpha must be >= 10")


@dataclass(frozen=True)
class ScenarioConfig:
    model: LinkModel
    costs: CostParams
    scenario: PlanarScenario
    attenuation: AttenuationSpec | None = None
    alpha_bb: float | None = None
    mc: McSettings = McSettings()


# table -> {key: (required, type)}; nested tables handled separately
_FLOAT = (int, float)
_SCHEMA = {
    "link": {"variant": str, "r0": _FLOAT, "lambda_qkd": _FLOAT, "a": _FLOAT, "b": _FLOAT},
    "link.attenuation": {
        "alpha_db_per_km": _FLOAT,
        "r_exponent": _FLOAT,
        "eta_d": _FLOAT,
        "p_d": _FLOAT,
    },
    "costs": {"c_qkd": _FLOAT, "c_node": _FLOAT},
    "scenario": {"length_l": _FLOAT, "alpha_u": _FLOAT, "volume_v": _FLOAT},
    "backbone": {"alpha_bb": _FLOAT},
    "mc": {"replicas": int, "pairs": int, "seed": int, "side_in_alpha": _FLOAT},
}


def _check_table(table: dict, path: str, allow_subtables: tuple[str, ...] = ()) -> None:
    schema = _SCHEMA[path]
    for key, value in table.items():
        if isinstance(value, dict):
            if key not in allow_subtables:
                raise ConfigError(f"unknown table [{path}.{key}]", path=f"{path}.{key}")
            continue
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", path=f"{path}.{key}")
        want = schema[key]
        # bool is an int subclass; a bare true/false is never a number here
        if isinstance(value, bool) or not isinstance(value, want):
            kind = "an integer" if want is int else (
                "a string" if want is str else "a number")
            raise ConfigError(f"expected {kind}, got {value!r}", path=f"{path}.{key}")


def _get(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError("required key missing", path=f"{path}.{key}")
    return table[key]


def parse_config(text: str) -> ScenarioConfig:
    """Parse a TOML scenario document; raise ConfigError (with a dotted
    field path) on anything malformed."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc

    for section in doc:
        if section not in ("link", "costs", "scenario", "backbone", "mc"):
            raise ConfigError(f"unknown table [{section}]", path=section)
        if not isinstance(doc[section], dict):
            raise ConfigError("expected a table", path=section)

    link = doc.get("link")
    if not isinstance(link, dict):
        raise ConfigError("required table missing", path="link")
    _check_table(link, "link", allow_subtables=("attenuation",))

    attenuation = None
    att_table = link.get("attenuation")
    if att_table is not None:
        _check_table(att_table, "link.attenuation")
        try:
            attenuation = AttenuationSpec(
                alpha_db_per_km=float(_get(att_table, "alpha_db_per_km", "link.attenuation")),
                r_exponent=float(att_table.get("r_exponent", 1.0)),
                eta_d=float(att_table.get("eta_d", 0.1)),
                p_d=float(att_table.get("p_d", 1e-7)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc), path="link.attenuation") from exc

    if ("lambda_qkd" in link) == (attenuation is not None):
        raise ConfigError(
            "exactly one of lambda_qkd and [link.attenuation] must be given",
            path="link.lambda_qkd",
        )
    lam = float(link["lambda_qkd"]) if attenuation is None else lambda_from_attenuation(attenuation)

    variant = link.get("variant", "exponential")
    r0 = float(_get(link, "r0", "link"))
    try:
        if variant == "exponential":
            for forbidden in ("a", "b"):
                if forbidden in link:
                    raise ConfigError(
                        "only the bb84 variant takes this key", path=f"link.{forbidden}"
                    )
            model = LinkModel.exponential(r0=r0, lambda_qkd=lam)
        elif variant == "bb84":
            model = LinkModel.bb84(
                r0=r0,
                lambda_qkd=lam,
                a=float(_get(link, "a", "link")),
                b=float(_get(link, "b", "link")),
            )
        else:
            raise ConfigError(
                f"unknown variant {variant!r} (expected 'exponential' or 'bb84')",
                path="link.variant",
            )
    except ValueError as exc:
        raise ConfigError(str(exc), path="link") from exc

    costs_table = doc.get("costs")
    if not isinstance(costs_table, dict):
        raise ConfigError("required table missing", path="costs")
    _check_table(costs_table, "costs")
    try:
        costs = CostParams(
            c_qkd=float(_get(costs_table, "c_qkd", "costs")),
            c_node=float(costs_table.get("c_node", 0.0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), path="costs") from exc

    sc_table = doc.get("scenario")
    if not isinstance(sc_table, dict):
        raise ConfigError("required table missing", path="scenario")
    _check_table(sc_table, "scenario")
    try:
        scenario = PlanarScenario(
            length_l=float(_get(sc_table, "length_l", "scenario")),
            alpha_u=float(_get(sc_table, "alpha_u", "scenario")),
            volume_v=float(_get(sc_table, "volume_v", "scenario")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), path="scenario") from exc

    alpha_bb = None
    bb_table = doc.get("backbone")
    if bb_table is not None:
        _check_table(bb_table, "backbone")
        alpha_bb = float(_get(bb_table, "alpha_bb", "backbone"))
        if alpha_bb <= 0.0:
            raise ConfigError("alpha_bb must be > 0", path="backbone.alpha_bb")

    mc = McSettings()
    mc_table = doc.get("mc")
    if mc_table is not None:
        _check_table(mc_table, "mc")
        try:
            mc = McSettings(
                replicas=int(mc_table.get("replicas", mc.replicas)),
                pairs=int(mc_table.get("pairs", mc.pairs)),
                seed=int(mc_table.get("seed", mc.seed)),
                side_in_alpha=float(mc_table.get("side_in_alpha", mc.side_in_alpha)),
            )
        except ValueError as exc:
            raise ConfigError(str(exc), path="mc") from exc

    return ScenarioConfig(
        model=model,
        costs=costs,
        scenario=scenario,
        attenuation=attenuation,
        alpha_bb=alpha_bb,
        mc=mc,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", path=str(path)) from exc
    return parse_config(text)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {value!r}")


def emit_config(cfg: ScenarioConfig) -> str:
    """Serialize a ScenarioConfig back to TOML.  parse_config(emit_config(c))
    equals c field-wise."""
    lines = ["[link]"]
    lines.append(f"variant = {_fmt(cfg.model.variant)}")
    lines.append(f"r0 = {_fmt(cfg.model.r0)}")
    if cfg.attenuation is None:
        lines.append(f"lambda_qkd = {_fmt(cfg.model.lambda_qkd)}")
    if cfg.model.is_bb84:
        lines.append(f"a = {_fmt(cfg.model.bb84_a)}")
        lines.append(f"b = {_fmt(cfg.model.bb84_b)}")
    if cfg.attenuation is not None:
        att = cfg.attenuation
        lines.append("")
        lines.append("[link.attenuation]")
        lines.append(f"alpha_db_per_km = {_fmt(att.alpha_db_per_km)}")
        lines.append(f"r_exponent = {_fmt(att.r_exponent)}")
        lines.append(f"eta_d = {_fmt(att.eta_d)}")
        lines.append(f"p_d = {_fmt(att.p_d)}")
    lines += [
        "",
        "[costs]",
        f"c_qkd = {_fmt(cfg.costs.c_qkd)}",
        f"c_node = {_fmt(cfg.costs.c_node)}",
        "",
        "[scenario]",
        f"length_l = {_fmt(cfg.scenario.length_l)}",
        f"alpha_u = {_fmt(cfg.scenario.alpha_u)}",
        f"volume_v = {_fmt(cfg.scenario.volume_v)}",
    ]
    if cfg.alpha_bb is not None:
        lines += ["", "[backbone]", f"alpha_bb = {_fmt(cfg.alpha_bb)}"]
    lines += [
        "",
        "[mc]",
        f"replicas = {_fmt(cfg.mc.replicas)}",
        f"pairs = {_fmt(cfg.mc.pairs)}",
        f"seed = {_fmt(cfg.mc.seed)}",
        f"side_in_alpha = {_fmt(cfg.mc.side_in_alpha)}",
    ]
    return "\n".join(lines) + "\n"
