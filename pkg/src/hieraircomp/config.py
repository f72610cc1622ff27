"""Experiment configuration files (YAML or JSON).

Schema (all keys optional; defaults are the reference simulation setup)::

    num_wds: 50
    num_relays: 10
    message_variance: 1.0          # scalar or list of length num_wds
    power_unit: dBm                # dBm | W, applies to both budgets
    wd_power_budget: 26            # scalar or list
    relay_power_budget: 26         # scalar or list
    noise_unit: W                  # dBm | W
    relay_noise_power: 1.0e-9      # scalar or list
    fc_noise_power: 1.0e-9
    wd_relay_distance: 350         # meters; scalar or num_wds x num_relays
    relay_fc_distance: 150         # meters; scalar or list
    reference_pathloss_db: -37
    pathloss_exponent: 3.2
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .model import (ChannelGeometry, ConfigError, SystemConfig, db_to_linear, dbm_to_watts,
                    validate_config)

__all__ = ["ConfigTemplate", "load_config", "parse_config", "reference_defaults"]

_KEYS = {
    "num_wds", "num_relays", "message_variance", "power_unit", "wd_power_budget",
    "relay_power_budget", "noise_unit", "relay_noise_power", "fc_noise_power",
    "wd_relay_distance", "relay_fc_distance", "reference_pathloss_db", "pathloss_exponent",
}


@dataclass(frozen=True)
class ConfigTemplate:
    """Unit-normalized (Watts, linear) parameters that can be instantiated at any K, M
    as long as the per-node entries are scalars."""

    num_wds: int = 50
    num_relays: int = 10
    message_variance: object = 1.0
    wd_power_budget: object = float(dbm_to_watts(26))
    relay_power_budget: object = float(dbm_to_watts(26))
    relay_noise_power: object = 1e-9
    fc_noise_power: float = 1e-9
    wd_relay_distance: object = 350.0
    relay_fc_distance: object = 150.0
    reference_pathloss: float = float(db_to_linear(-37))
    pathloss_exponent: float = 3.2

    def with_dims(self, num_wds: int | None = None, num_relays: int | None = None) -> "ConfigTemplate":
        return replace(self, num_wds=self.num_wds if num_wds is None else int(num_wds),
                       num_relays=self.num_relays if num_relays is None else int(num_relays))

    def instantiate(self, num_wds: int | None = None, num_relays: int | None = None):
        """Return a validated ``(SystemConfig, ChannelGeometry)`` pair."""
        K = self.num_wds if num_wds is None else int(num_wds)
        M = self.num_relays if num_relays is None else int(num_relays)
        if K < 1 or M < 1:
            raise ConfigError(f"need at least one WD and one relay, got K={K}, M={M}")
        cfg = SystemConfig.build(
            K, M,
            message_variance=self.message_variance,
            wd_power_budget=self.wd_power_budget,
            relay_power_budget=self.relay_power_budget,
            relay_noise_power=self.relay_noise_power,
            fc_noise_power=self.fc_noise_power,
        )
        geom = ChannelGeometry.build(
            K, M,
            wd_relay_distance=self.wd_relay_distance,
            relay_fc_distance=self.relay_fc_distance,
            reference_pathloss=self.reference_pathloss,
            pathloss_exponent=self.pathloss_exponent,
        )
        return validate_config(cfg, geom), geom


def reference_defaults() -> ConfigTemplate:
    return ConfigTemplate()


def _to_watts(value, unit: str, key: str):
    unit = str(unit).strip().lower()
    arr = np.asarray(value, dtype=float)
    if unit == "dbm":
        arr = dbm_to_watts(arr)
    elif unit not in ("w", "watt", "watts"):
        raise ConfigError(f"unknown unit {unit!r} for {key}; use 'dBm' or 'W'")
    return float(arr) if arr.ndim == 0 else arr.tolist()


def parse_config(data: dict) -> ConfigTemplate:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of keys to values")
    unknown = set(data) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = reference_defaults()
    kw = {}
    for key in ("num_wds", "num_relays"):
        if key in data:
            kw[key] = int(data[key])
    for key in ("message_variance", "wd_relay_distance", "relay_fc_distance"):
        if key in data:
            kw[key] = data[key]
    if "pathloss_exponent" in data:
        kw["pathloss_exponent"] = float(data["pathloss_exponent"])
    if "reference_pathloss_db" in data:
        kw["reference_pathloss"] = float(db_to_linear(float(data["reference_pathloss_db"])))
    for keys, unit_key in ((("wd_power_budget", "relay_power_budget"), "power_unit"),
                           (("relay_noise_power", "fc_noise_power"), "noise_unit")):
        present = [k for k in keys if k in data]
        if present and unit_key not in data:
            raise ConfigError(f"{present} given without an explicit {unit_key!r}")
        for k in present:
            kw[k] = _to_watts(data[k], data[unit_key], k)
    try:
        template = replace(base, **kw)
        template.instantiate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return template


def load_config(path) -> ConfigTemplate:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    return parse_config(data or {})
