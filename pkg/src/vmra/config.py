"""JSON configuration for the CLI.

A config file mirrors the parameter field names exactly, carries optional
mixing-function value tables, the experiment settings and an output
directory.  Unknown keys are rejected so that typos never silently fall
back to defaults.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .baselines import ModelKind
from .errors import ConfigError
from .model import MixingParams

DEFAULT_PARAMS = {
    "num_zones": 1,
    "servers_per_zone": 3,
    "t_int": 10.0,
    "t_ext": 15.0,
    "t_mix_slope": 7.0,
    "r_mix_per_source": 20.0,
    "r_operating": 400.0,
    "r_capacity": 10240.0,
    "t_qos": 300.0,
}

DEFAULT_SCENARIO = {
    "zone_range": [1, 2, 3, 4, 5, 6],
    "models": ["VMRA", "MCU", "CMCU", "FixedNodes"],
    "fixed_nodes": None,
    "zone_users": None,
    "seed": 0,
}

_INT_PARAM_FIELDS = ("num_zones", "servers_per_zone")


@dataclass(frozen=True)
class CliConfig:
    params: MixingParams
    zone_range: tuple[int, ...]
    models: tuple[ModelKind, ...]
    fixed_nodes: int | None
    zone_users: tuple[int, ...] | None
    seed: int
    output_dir: str


def default_config() -> CliConfig:
    return _from_mapping({})


def load_config(path: str | Path | None) -> CliConfig:
    """Load a config file; ``None`` returns the built-in defaults."""
    if path is None:
        return default_config()
    text = Path(path).read_text(encoding="utf-8")
    raw = json.loads(text)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return _from_mapping(raw)


def _from_mapping(raw: dict) -> CliConfig:
    known = {"params", "t_mix_table", "r_mix_table", "scenario", "output_dir"}
    _reject_unknown(raw, known, "config")

    params_raw = dict(DEFAULT_PARAMS)
    given = raw.get("params", {})
    if not isinstance(given, dict):
        raise ConfigError("params: must be a JSON object")
    _reject_unknown(given, set(DEFAULT_PARAMS), "params")
    params_raw.update(given)
    for name, value in params_raw.items():
        if name in _INT_PARAM_FIELDS:
            params_raw[name] = _as_int(name, value)
        else:
            params_raw[name] = _as_number(name, value)

    t_table = _as_table("t_mix_table", raw.get("t_mix_table"))
    r_table = _as_table("r_mix_table", raw.get("r_mix_table"))
    params = MixingParams(**params_raw, t_mix_table=t_table, r_mix_table=r_table)

    scenario_raw = dict(DEFAULT_SCENARIO)
    given = raw.get("scenario", {})
    if not isinstance(given, dict):
        raise ConfigError("scenario: must be a JSON object")
    _reject_unknown(given, set(DEFAULT_SCENARIO), "scenario")
    scenario_raw.update(given)

    zone_range = tuple(_as_int("zone_range entry", z)
                       for z in scenario_raw["zone_range"])
    models = tuple(_as_model(tag) for tag in scenario_raw["models"])
    fixed_nodes = scenario_raw["fixed_nodes"]
    if fixed_nodes is not None:
        fixed_nodes = _as_int("fixed_nodes", fixed_nodes)
    zone_users = scenario_raw["zone_users"]
    if zone_users is not None:
        zone_users = tuple(_as_int("zone_users entry", u) for u in zone_users)
    seed = _as_int("seed", scenario_raw["seed"])

    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir: must be a string")
    return CliConfig(params, zone_range, models, fixed_nodes, zone_users,
                     seed, output_dir)


def normalized_json(cfg: CliConfig) -> str:
    """Canonical JSON rendering; reloading it yields an identical config."""
    p = cfg.params
    doc = {
        "params": {name: getattr(p, name) for name in DEFAULT_PARAMS},
        "t_mix_table": list(p.t_mix_table) if p.t_mix_table else None,
        "r_mix_table": list(p.r_mix_table) if p.r_mix_table else None,
        "scenario": {
            "zone_range": list(cfg.zone_range),
            "models": [m.value for m in cfg.models],
            "fixed_nodes": cfg.fixed_nodes,
            "zone_users": list(cfg.zone_users) if cfg.zone_users else None,
            "seed": cfg.seed,
        },
        "output_dir": cfg.output_dir,
    }
    return json.dumps(doc, indent=2)


def _reject_unknown(mapping: dict, known: set[str], where: str):
    unknown = sorted(set(mapping) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")


def _as_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    return value


def _as_number(name: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    return float(value)


def _as_table(name: str, value) -> tuple[float, ...] | None:
    if value is None:
        return None
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name}: expected a non-empty list")
    return tuple(_as_number(f"{name} entry", v) for v in value)


def _as_model(tag) -> ModelKind:
    try:
        return ModelKind(tag)
    except ValueError:
        valid = [m.value for m in ModelKind]
        raise ConfigError(f"models: unknown model tag {tag!r}, expected one "
                          f"of {valid}") from None
