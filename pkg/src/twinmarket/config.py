"""TOML run-configuration parsing with strict schema checking.

Unknown sections or keys are hard errors so that typos in sweep scripts
fail loudly instead of silently running defaults.
"""

from __future__ import annotations

import hashlib
import json
import sys
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .params import (BidAskSpec, LearningParams, MarketSpec, PopulationSpec,
                     RecordFlags, SimConfig)


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "population": {"n_agents": int, "kind": str, "type_mix": list},
    "markets": {"theta": list},
    "bidask": {"mu_ask": float, "sigma_ask": float,
               "mu_bid": float, "sigma_bid": float},
    "learning": {"beta": float, "r": float, "alpha": float},
    "run": {"n_periods": int, "burn_in": int, "seed": int,
            "snapshots": bool, "snapshot_stride": int, "snapshot_start": int},
}


def _check_keys(data: dict, schema: dict, where: str = "config"):
    for key in data:
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' in {where}; "
                              f"allowed: {sorted(schema)}")


def _coerce(section: str, key: str, value: Any) -> Any:
    want = _SCHEMA[section][key]
    if want is float and isinstance(value, (int, float)) \
            and not isinstance(value, bool):
        return float(value)
    if want is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if not isinstance(value, want) or isinstance(value, bool) != (want is bool):
        raise ConfigError(f"{section}.{key} must be {want.__name__}, "
                          f"got {type(value).__name__}")
    return value


def config_from_dict(data: dict) -> SimConfig:
    """Build a validated SimConfig from a parsed (TOML or manifest) dict."""
    _check_keys(data, _SCHEMA)
    parsed: dict[str, dict] = {}
    for section, keys in _SCHEMA.items():
        raw = data.get(section, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"section [{section}] must be a table")
        _check_keys(raw, keys, f"[{section}]")
        parsed[section] = {k: _coerce(section, k, v) for k, v in raw.items()}

    pop_kw = dict(parsed["population"])
    if "type_mix" in pop_kw:
        try:
            pop_kw["type_mix"] = tuple(
                (float(p), float(w)) for p, w in pop_kw["type_mix"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("population.type_mix must be a list of "
                              "[p_buy, weight] pairs") from exc
    mk_kw = dict(parsed["markets"])
    if "theta" in mk_kw:
        try:
            mk_kw["theta"] = tuple(float(t) for t in mk_kw["theta"])
        except (TypeError, ValueError) as exc:
            raise ConfigError("markets.theta must be a list of numbers") from exc
    run_kw = dict(parsed["run"])
    record_kw = {k: run_kw.pop(k) for k in
                 ("snapshots", "snapshot_stride", "snapshot_start")
                 if k in run_kw}
    if "beta" not in parsed["learning"]:
        raise ConfigError("learning.beta is required")
    try:
        return SimConfig(population=PopulationSpec(**pop_kw),
                         markets=MarketSpec(**mk_kw),
                         bidask=BidAskSpec(**parsed["bidask"]),
                         learning=LearningParams(**parsed["learning"]),
                         record=RecordFlags(**record_kw), **run_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str) -> SimConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: SimConfig) -> dict:
    """Echo a SimConfig as the dict config_from_dict accepts (round-trips)."""
    return {
        "population": {
            "n_agents": cfg.population.n_agents,
            "kind": cfg.population.kind,
            "type_mix": [[p, w] for p, w in cfg.population.type_mix],
        },
        "markets": {"theta": list(cfg.markets.theta)},
        "bidask": {
            "mu_ask": cfg.bidask.mu_ask, "sigma_ask": cfg.bidask.sigma_ask,
            "mu_bid": cfg.bidask.mu_bid, "sigma_bid": cfg.bidask.sigma_bid,
        },
        "learning": {"beta": cfg.learning.beta, "r": cfg.learning.r,
                     "alpha": cfg.learning.alpha},
        "run": {
            "n_periods": cfg.n_periods, "burn_in": cfg.burn_in,
            "seed": cfg.seed, "snapshots": cfg.record.snapshots,
            "snapshot_start": cfg.record.snapshot_start,
            # stride is omitted when left to the run-time default
            **({"snapshot_stride": cfg.record.snapshot_stride}
               if cfg.record.snapshot_stride is not None else {}),
        },
    }


def config_hash(data: dict) -> str:
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
