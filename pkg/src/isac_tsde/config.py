"""Run configuration files (YAML) and their mapping onto library objects.

Physical quantities carry their SI unit in the key name (``delta_f_hz``,
``delay_spread_max_s``). Unknown keys are rejected with the line they
appear on.
"""

from __future__ import annotations

import yaml

from .channel import ScenarioSpec
from .core import SystemConfig
from .eval import METHODS, SweepConfig


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _float(v):
    if isinstance(v, bool):
        raise TypeError("expected a number")
    return float(v)


def _int(v):
    if isinstance(v, bool) or int(v) != v:
        raise TypeError("expected an integer")
    return int(v)


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError("expected true or false")
    return v


def _opt_float(v):
    return None if v is None else _float(v)


def _gamma(v):
    if v == "auto":
        return v
    return _float(v)


def _snr_list(v):
    if not isinstance(v, list):
        raise TypeError("expected a list of SNR values in dB")
    return [_float(x) for x in v]


def _methods(v):
    if not isinstance(v, list) or not all(m in METHODS for m in v):
        raise TypeError(f"expected a list drawn from {list(METHODS)}")
    return list(v)


def _choice(*options):
    def check(v):
        if v not in options:
            raise TypeError(f"expected one of {list(options)}")
        return v
    return check


SCHEMA = {
    "system": {"delta_f_hz": _float, "k": _int, "k1": _int, "n_cp": _int},
    "channel": {
        "l": _int,
        "delay_spread_max_s": _float,
        "delay_offset_s": _float,
        "on_grid": _bool,
        "min_separation_s": _float,
        "gain_model": {"magnitude_min": _float, "magnitude_max": _float},
        "snr_db": _opt_float,
    },
    "estimator": {"gamma_th": _gamma, "noise_sigmas": _float, "joint_refit": _bool},
    "sweep": {
        "snr_db": _snr_list,
        "trials": _int,
        "methods": _methods,
        "master_seed": _int,
        "symbols": _choice("chu", "qpsk"),
        "pairing": _choice("sorted", "hungarian"),
    },
}

REQUIRED = {"system": ("delta_f_hz", "k", "k1")}


def _walk(node, schema, path):
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"'{path or 'document'}' must be a mapping", node.start_mark.line + 1)
    out = {}
    for key_node, value_node in node.value:
        key = key_node.value
        line = key_node.start_mark.line + 1
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown key '{where}'", line)
        if key in out:
            raise ConfigError(f"duplicate key '{where}'", line)
        rule = schema[key]
        if isinstance(rule, dict):
            out[key] = _walk(value_node, rule, where)
            continue
        value = yaml.safe_load(yaml.serialize(value_node))
        try:
            out[key] = rule(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for '{where}': {exc}", line) from None
    return out


def parse_config_text(text: str) -> dict:
    """Parse and validate YAML text into a plain nested dict."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {exc}", mark.line + 1 if mark else None) from None
    if root is None:
        raise ConfigError("empty configuration")
    data = _walk(root, SCHEMA, "")
    return data


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def validate_dict(data: dict) -> dict:
    """Validate an already-parsed dict (e.g. from a manifest) against the schema."""
    return parse_config_text(yaml.safe_dump(data, sort_keys=False))


def system_config(data: dict) -> SystemConfig:
    sysd = data.get("system", {})
    for key in REQUIRED["system"]:
        if key not in sysd:
            raise ConfigError(f"missing required key 'system.{key}'")
    try:
        return SystemConfig(sysd["delta_f_hz"], sysd["k"], sysd["k1"], sysd.get("n_cp"))
    except ValueError as exc:
        raise ConfigError(f"invalid 'system' section: {exc}") from None


def scenario_spec(data: dict, cfg: SystemConfig, seed=None) -> ScenarioSpec:
    ch = data.get("channel", {})
    gains = ch.get("gain_model", {})
    try:
        spec = ScenarioSpec(
            n_paths=ch.get("l", 2),
            delay_spread_max=ch.get("delay_spread_max_s", (cfg.n_cp // 2) * cfg.T_s),
            delay_offset=ch.get("delay_offset_s", cfg.T_s),
            on_grid=ch.get("on_grid", True),
            min_separation=ch.get("min_separation_s", cfg.T_s),
            gain_min=gains.get("magnitude_min", 0.5),
            gain_max=gains.get("magnitude_max", 1.0),
            snr_db=ch.get("snr_db"),
            seed=data.get("sweep", {}).get("master_seed", 0) if seed is None else seed,
        )
        return spec.check(cfg)
    except ValueError as exc:
        raise ConfigError(f"invalid 'channel' section: {exc}") from None


def sweep_config(data: dict, seed=None) -> SweepConfig:
    cfg = system_config(data)
    spec = scenario_spec(data, cfg, seed)
    est = data.get("estimator", {})
    sw = data.get("sweep", {})
    kwargs = {
        "gamma_th": est.get("gamma_th", "auto"),
        "noise_sigmas": est.get("noise_sigmas", 3.0),
        "joint_refit": est.get("joint_refit", False),
    }
    for key, name in (("snr_db", "snr_grid"), ("trials", "trials"), ("methods", "methods"),
                      ("master_seed", "master_seed"), ("symbols", "symbols"),
                      ("pairing", "pairing")):
        if key in sw:
            kwargs[name] = sw[key]
    if seed is not None:
        kwargs["master_seed"] = seed
    try:
        return SweepConfig(cfg, spec, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid sweep configuration: {exc}") from None


def sweep_to_dict(sc: SweepConfig) -> dict:
    """Full, explicit config dict that :func:`sweep_config` maps back to ``sc``."""
    cfg, spec = sc.cfg, sc.scenario
    return {
        "system": {"delta_f_hz": cfg.delta_f, "k": cfg.K, "k1": cfg.K1, "n_cp": cfg.n_cp},
        "channel": {
            "l": spec.n_paths,
            "delay_spread_max_s": spec.delay_spread_max,
            "delay_offset_s": spec.delay_offset,
            "on_grid": spec.on_grid,
            "min_separation_s": spec.min_separation,
            "gain_model": {"magnitude_min": spec.gain_min, "magnitude_max": spec.gain_max},
            "snr_db": spec.snr_db,
        },
        "estimator": {
            "gamma_th": sc.gamma_th,
            "noise_sigmas": sc.noise_sigmas,
            "joint_refit": sc.joint_refit,
        },
        "sweep": {
            "snr_db": list(sc.snr_grid),
            "trials": sc.trials,
            "methods": list(sc.methods),
            "master_seed": sc.master_seed,
            "symbols": sc.symbols,
            "pairing": sc.pairing,
        },
    }
