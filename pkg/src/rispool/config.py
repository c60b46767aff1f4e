"""Scenario / experiment configuration document.

The configuration is a nested key-value document (YAML on disk). Every key
has a default; unknown keys are rejected with their full path so typos never
silently fall back to defaults. ``load_config`` returns the fully populated
nested dict that the rest of the package consumes.

Schema (defaults shown):

scenario:
  geometry:
    bs_position: [0.0, 0.0, 3.0]      # meters
    ris_position: [0.5, 0.0, 3.0]
    ue_count: 4
    ue_radius_m: 10.0                 # semicircle radius around the origin
    ue_height_m: 1.5
  arrays:
    bs_antennas: 16                   # uniform linear array
    ue_antennas: 4                    # uniform linear array
    ris_rows: 8                       # uniform planar array, rows x cols
    ris_cols: 16
  frequency:
    first_center_hz: 2.4e9            # UE u center = first + (u-1)*(bw+guard)
    bandwidth_hz: 20.0e6
    guard_hz: 2.0e6
  pathloss:
    reference_distance_m: 1.0
    los_exponent: 2.0
    nlos_exponent: 3.0
    nlos_total_offset_db: -10.0       # total NLoS budget relative to LoS
    los_paths: 1
    nlos_paths: 4
  blockage:
    bs_ue: 0.3                        # per-epoch blockage probabilities
    ris_ue: 0.3
    bs_ris: 0.0
    attenuation_db: 30.0
  power:
    tx_power_dbm: 30.0                # per UE band
    noise_psd_dbm_hz: -174.0
    noise_figure_db: 9.0
  element:
    l1_h: 2.5e-9
    l2_h: 0.7e-9
    z0_ohm: 377.0
    resistance_ohm: 1.0
    quantization_levels: 0            # 0 = continuous tuning
optimizer:
  step_exponent: 0.602                # gain schedule a_k = a/(A+k+1)^step_exponent
  probe_exponent: 0.101               # c_k = c/(k+1)^probe_exponent
  stability_fraction: 0.1             # A = fraction * budget
  step_scale: null                    # a; null = calibrate from a pilot
  probe_scale: null                   # c; null = calibrate from a pilot
  pilot_epochs: 8
  averaging_epochs: 1                 # M feedback samples per probe
episode:
  subscriptions: [1, 3]               # 1-based UE ids that subscribe
  qos_target_bps: 5.0e9
  detection_window: 10                # W samples for degradation / QoS checks
  eval_epochs: 50                     # post-optimization measurement window
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    """Configuration document rejected; message carries the offending key path."""


def _positive(x) -> bool:
    return x > 0


def _non_negative(x) -> bool:
    return x >= 0


def _probability(x) -> bool:
    return 0.0 <= x <= 1.0


def _any(x) -> bool:
    return True


# Leaf spec: (default, kind, predicate). kind is one of
# "number", "int", "vec3", "int_list", "opt_number".
_SCHEMA: dict[str, Any] = {
    "scenario": {
        "geometry": {
            "bs_position": ([0.0, 0.0, 3.0], "vec3", _any),
            "ris_position": ([0.5, 0.0, 3.0], "vec3", _any),
            "ue_count": (4, "int", _positive),
            "ue_radius_m": (10.0, "number", _positive),
            "ue_height_m": (1.5, "number", _non_negative),
        },
        "arrays": {
            "bs_antennas": (16, "int", _positive),
            "ue_antennas": (4, "int", _positive),
            "ris_rows": (8, "int", _positive),
            "ris_cols": (16, "int", _positive),
        },
        "frequency": {
            "first_center_hz": (2.4e9, "number", _positive),
            "bandwidth_hz": (20.0e6, "number", _positive),
            "guard_hz": (2.0e6, "number", _non_negative),
        },
        "pathloss": {
            "reference_distance_m": (1.0, "number", _positive),
            "los_exponent": (2.0, "number", _non_negative),
            "nlos_exponent": (3.0, "number", _non_negative),
            "nlos_total_offset_db": (-10.0, "number", _any),
            "los_paths": (1, "int", lambda x: x in (0, 1)),
            "nlos_paths": (4, "int", _non_negative),
        },
        "blockage": {
            "bs_ue": (0.3, "number", _probability),
            "ris_ue": (0.3, "number", _probability),
            "bs_ris": (0.0, "number", _probability),
            "attenuation_db": (30.0, "number", _non_negative),
        },
        "power": {
            "tx_power_dbm": (30.0, "number", _any),
            "noise_psd_dbm_hz": (-174.0, "number", _any),
            "noise_figure_db": (9.0, "number", _non_negative),
        },
        "element": {
            "l1_h": (2.5e-9, "number", _positive),
            "l2_h": (0.7e-9, "number", _positive),
            "z0_ohm": (377.0, "number", _positive),
            "resistance_ohm": (1.0, "number", _non_negative),
            "quantization_levels": (0, "int", lambda x: x == 0 or x >= 2),
        },
    },
    "optimizer": {
        "step_exponent": (0.602, "number", _positive),
        "probe_exponent": (0.101, "number", _positive),
        "stability_fraction": (0.1, "number", _non_negative),
        "step_scale": (None, "opt_number", _positive),
        "probe_scale": (None, "opt_number", _positive),
        "pilot_epochs": (8, "int", _positive),
        "averaging_epochs": (1, "int", _positive),
    },
    "episode": {
        "subscriptions": ([1, 3], "int_list", _positive),
        "qos_target_bps": (5.0e9, "number", _positive),
        "detection_window": (10, "int", _positive),
        "eval_epochs": (50, "int", _positive),
    },
}


def _check_leaf(path: str, value, kind: str, pred) -> Any:
    if kind == "opt_number":
        if value is None:
            return None
        kind = "number"
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite, got {value!r}")
        if not pred(value):
            raise ConfigError(f"{path}: value {value!r} out of range")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        if not pred(value):
            raise ConfigError(f"{path}: value {value!r} out of range")
        return value
    if kind == "vec3":
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise ConfigError(f"{path}: expected a 3-vector, got {value!r}")
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: expected numeric entries, got {value!r}") from None
    if kind == "int_list":
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        out = []
        for v in value:
            if isinstance(v, bool) or not isinstance(v, int) or not pred(v):
                raise ConfigError(f"{path}: bad entry {v!r}")
            out.append(v)
        return out
    raise AssertionError(f"unknown schema kind {kind}")


def _merge(schema: dict, user: dict, path: str) -> dict:
    if not isinstance(user, dict):
        raise ConfigError(f"{path or 'document'}: expected a mapping, got {user!r}")
    for key in user:
        if key not in schema:
            raise ConfigError(f"{path + '.' if path else ''}{key}: unknown key")
    out = {}
    for key, spec in schema.items():
        child_path = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            out[key] = _merge(spec, user.get(key, {}), child_path)
        else:
            default, kind, pred = spec
            if key in user:
                out[key] = _check_leaf(child_path, user[key], kind, pred)
            else:
                out[key] = default if not isinstance(default, list) else list(default)
    return out


def normalize_config(document: dict | None) -> dict:
    """Apply defaults and validate a parsed configuration mapping."""
    return _merge(_SCHEMA, document or {}, "")


def load_config(path: str | Path | None = None, text: str | None = None) -> dict:
    """Load and validate a YAML configuration document (path or literal text)."""
    if (path is None) == (text is None):
        raise ValueError("pass exactly one of path or text")
    raw = Path(path).read_text() if path is not None else text
    document = yaml.safe_load(raw) if raw and raw.strip() else {}
    if document is None:
        document = {}
    return normalize_config(document)


def default_config() -> dict:
    """The fully defaulted configuration document."""
    return normalize_config({})
