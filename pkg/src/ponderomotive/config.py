"""Scenario configuration: presets, TOML/JSON loading, validation.

Every quantity carries its unit in the key name.  A configuration is a dict
of sections; each section is either explicit keys or ``{"preset": name}``.
A top-level ``preset`` fills the sections that are not given.
"""
import copy
import json
import sys
from pathlib import Path

import numpy as np

from .cavity import LaserDrive, OpticalCavity, excess_loss_for_finesse, mode_matching_for_dip
from .core import ClassicalInjection, MechanicalOscillator, NoiseEnvironment
from .errors import ConfigError, ValidationError
from .noise import REFERENCE_MODES, DetectionChain, Scenario, frequency_grid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# Experimental cavity: finesse 1e4 with a 110 ppm coupler, 38 % reflection dip.
_CLASSICAL_T = 110e-6
_CLASSICAL_EXCESS = excess_loss_for_finesse(1.0e4, _CLASSICAL_T)
_CLASSICAL_MM = mode_matching_for_dip(0.38, _CLASSICAL_T, _CLASSICAL_EXCESS)

PRESETS = {
    "paper-classical": {
        "oscillator": {"mass_kg": 1.1e-7, "resonance_hz": 249300.0, "quality_factor": 5500.0},
        "cavity": {
            "length_mm": 12.2,
            "input_transmission_ppm": 110.0,
            "excess_loss_ppm": _CLASSICAL_EXCESS * 1e6,
            "mode_matching": _CLASSICAL_MM,
        },
        "laser": {
            "wavelength_nm": 1064.0,
            "power_mw": 5.6,
            "amplitude_noise_factor": 1.0,
            "frequency_noise_hz2_per_hz": 0.0,
            "frequency_noise_displacement_m2_per_hz": None,
        },
        "environment": {
            "temperature_k": 300.0,
            "injection": {"center_hz": 249300.0, "bandwidth_hz": 15000.0, "level_db": 10.0},
        },
        "detection": {
            "detection_loss": 0.0,
            "signal_to_lo_power_ratio": 0.01,
            "homodyne_angle_rad": 0.0,
            "wideband_displacement_m2_per_hz": 0.0,
            "reference": "classical",
        },
        "grid": {
            "f_min_hz": None, "f_max_hz": None, "log_points": 2000,
            "refine_linewidths": 20.0, "refine_points": 401,
            "window_hz": 7500.0, "window_points": 30001,
        },
        "homodyne": {"angles_deg": [0.0, -20.0, -44.0, -56.0, 26.0, 35.0, 45.0, 62.0]},
    },
    "paper-quantum": {
        "oscillator": {"mass_kg": 5e-8, "resonance_hz": 100000.0, "quality_factor": 1e5},
        "cavity": {
            "length_mm": 6.0,
            "input_transmission_ppm": 50.0,
            "excess_loss_ppm": 40.0,
            "mode_matching": 1.0,
        },
        "laser": {
            "wavelength_nm": 1064.0,
            "power_mw": 30.0,
            "amplitude_noise_factor": 5.0,
            "frequency_noise_hz2_per_hz": 1.0,
            "frequency_noise_displacement_m2_per_hz": 1e-33,
        },
        # cryogenic bath temperature is not quoted; 4.2 K assumed
        "environment": {"temperature_k": 4.2, "injection": None},
        "detection": {
            "detection_loss": 0.05,
            "signal_to_lo_power_ratio": 0.01,
            "homodyne_angle_rad": 1e-4,
            "wideband_displacement_m2_per_hz": 0.0,
            "reference": "vacuum",
        },
        "grid": {
            "f_min_hz": None, "f_max_hz": None, "log_points": 2000,
            "refine_linewidths": 20.0, "refine_points": 401,
            "window_hz": 3000.0, "window_points": 30001,
        },
        "homodyne": {"angles_deg": [float(np.degrees(1e-4))]},
    },
}

SECTIONS = ("oscillator", "cavity", "laser", "environment", "detection", "grid", "homodyne")

# key -> kind (num, int, str, opt_num, list, injection)
_SCHEMA = {
    "oscillator": {"mass_kg": "num", "resonance_hz": "num", "quality_factor": "num"},
    "cavity": {"length_mm": "num", "input_transmission_ppm": "num", "excess_loss_ppm": "num",
               "mode_matching": "num"},
    "laser": {"wavelength_nm": "num", "power_mw": "num", "amplitude_noise_factor": "num",
              "frequency_noise_hz2_per_hz": "num", "frequency_noise_displacement_m2_per_hz": "opt_num"},
    "environment": {"temperature_k": "num", "injection": "injection"},
    "detection": {"detection_loss": "num", "signal_to_lo_power_ratio": "num",
                  "homodyne_angle_rad": "num", "wideband_displacement_m2_per_hz": "num",
                  "reference": "str"},
    "grid": {"f_min_hz": "opt_num", "f_max_hz": "opt_num", "log_points": "int",
             "refine_linewidths": "num", "refine_points": "int", "window_hz": "num",
             "window_points": "int"},
    "homodyne": {"angles_deg": "list"},
}
_INJECTION_KEYS = ("center_hz", "bandwidth_hz", "level_db")


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _check_value(path, kind, value):
    if kind == "num":
        if not _is_number(value):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if kind == "opt_num":
        if value is None:
            return None
        return _check_value(path, "num", value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if kind == "list":
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, f"expected a list of numbers, got {value!r}")
        return [_check_value(f"{path}[{i}]", "num", v) for i, v in enumerate(value)]
    if kind == "injection":
        if value is None or value is False:
            return None
        if not isinstance(value, dict):
            raise ConfigError(path, "expected a table with center_hz, bandwidth_hz, level_db")
        unknown = set(value) - set(_INJECTION_KEYS)
        if unknown:
            raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown key")
        out = {}
        for key in _INJECTION_KEYS:
            if key not in value:
                raise ConfigError(f"{path}.{key}", "missing")
            out[key] = _check_value(f"{path}.{key}", "num", value[key])
        return out
    raise AssertionError(kind)


def _preset(name, path):
    if name not in PRESETS:
        raise ConfigError(path, f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


def resolve(raw):
    """Validate a raw config mapping and return the fully explicit form."""
    if not isinstance(raw, dict):
        raise ConfigError("", "configuration must be a table")
    unknown = set(raw) - set(SECTIONS) - {"preset"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown section")
    base = _preset(raw["preset"], "preset") if raw.get("preset") is not None else None
    out = {}
    for section in SECTIONS:
        given = raw.get(section)
        if given is None:
            if base is None:
                raise ConfigError(section, "missing section (and no top-level preset)")
            body = base[section]
        elif not isinstance(given, dict):
            raise ConfigError(section, "expected a table")
        elif "preset" in given:
            if len(given) != 1:
                raise ConfigError(section, "give either a preset or explicit keys, not both")
            body = _preset(given["preset"], f"{section}.preset")[section]
        else:
            body = given
        schema = _SCHEMA[section]
        extra = set(body) - set(schema)
        if extra:
            raise ConfigError(f"{section}.{sorted(extra)[0]}", "unknown key")
        checked = {}
        for key, kind in schema.items():
            path = f"{section}.{key}"
            if key not in body:
                if kind in ("opt_num", "injection"):
                    checked[key] = None
                    continue
                raise ConfigError(path, "missing")
            checked[key] = _check_value(path, kind, body[key])
        out[section] = checked
    build_scenario(out)  # surfaces invariant violations with field paths
    return out


def _build(path, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except ValidationError as exc:
        raise ConfigError(path, str(exc)) from exc


def build_scenario(cfg):
    """Scenario, frequency grid and homodyne angles (rad) of a resolved config."""
    o, c, l, e, d, g = (cfg[k] for k in ("oscillator", "cavity", "laser", "environment", "detection", "grid"))
    osc = _build("oscillator", MechanicalOscillator.from_frequency,
                 o["mass_kg"], o["resonance_hz"], o["quality_factor"])
    inj = None
    if e["injection"] is not None:
        inj = _build("environment.injection", ClassicalInjection,
                     e["injection"]["center_hz"], e["injection"]["bandwidth_hz"], e["injection"]["level_db"])
    env = _build("environment", NoiseEnvironment, e["temperature_k"], inj)
    cav = _build("cavity", OpticalCavity, c["length_mm"] * 1e-3, c["input_transmission_ppm"] * 1e-6,
                 c["excess_loss_ppm"] * 1e-6, c["mode_matching"])
    laser = _build("laser", LaserDrive, l["wavelength_nm"] * 1e-9, l["power_mw"] * 1e-3,
                   l["amplitude_noise_factor"], l["frequency_noise_hz2_per_hz"])
    if d["reference"] not in REFERENCE_MODES:
        raise ConfigError("detection.reference", f"must be one of {REFERENCE_MODES}")
    det = _build("detection", DetectionChain, d["detection_loss"], d["signal_to_lo_power_ratio"],
                 d["homodyne_angle_rad"], d["wideband_displacement_m2_per_hz"])
    scn = _build("laser.frequency_noise_displacement_m2_per_hz", Scenario, osc, env, cav, laser, det,
                 d["reference"], l["frequency_noise_displacement_m2_per_hz"])
    if inj is not None:
        from .noise import inject_classical_noise
        _build("environment.injection", inject_classical_noise, env, osc)
    grid = _build("grid", frequency_grid, osc.resonance_hz, osc.quality_factor, g["f_min_hz"], g["f_max_hz"],
                  g["log_points"], g["refine_linewidths"], g["refine_points"], g["window_hz"], g["window_points"])
    angles = [np.radians(a) for a in cfg["homodyne"]["angles_deg"]]
    return scn, grid, angles


def load_config(path=None, preset=None, overrides=()):
    """Read TOML or JSON (by suffix), apply a preset and ``section.key=value`` overrides."""
    raw = {}
    if path is not None:
        p = Path(path)
        text = p.read_bytes()
        try:
            if p.suffix.lower() == ".json":
                raw = json.loads(text)
            else:
                raw = tomllib.loads(text.decode("utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise ConfigError(str(p), f"cannot parse: {exc}") from exc
    if preset is not None:
        # a CLI preset only fills sections the file leaves out
        raw = dict(raw, preset=preset)
    if not raw:
        raise ConfigError("", "no configuration given (use --config or --preset)")
    cfg = resolve(raw)
    for item in overrides:
        cfg = apply_override(cfg, item)
    return cfg


def set_value(cfg, dotted, value):
    """Copy of ``cfg`` with ``section.key`` (or ``environment.injection.key``) replaced."""
    parts = dotted.split(".")
    new = copy.deepcopy(cfg)
    node = new
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node or not isinstance(node[part], dict):
            raise ConfigError(".".join(parts[:i + 1]), "invalid parameter path")
        node = node[part]
    if parts[-1] not in node:
        raise ConfigError(dotted, "invalid parameter path")
    node[parts[-1]] = value
    return resolve(new)


def apply_override(cfg, item):
    if "=" not in item:
        raise ConfigError(item, "override must look like section.key=value")
    key, text = item.split("=", 1)
    try:
        value = json.loads(text)
    except ValueError:
        value = text
    return set_value(cfg, key.strip(), value)


def dumps(cfg):
    return json.dumps(cfg, indent=2, sort_keys=True)
