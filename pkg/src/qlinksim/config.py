"""Flat ``key = value`` run configuration with named presets.

Precedence, lowest first: built-in defaults, preset, config file, flags.
List values are comma separated; ``start:stop:step`` expands to an inclusive
range.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    pass


SWEEP_DEFAULTS = {
    "d": "3,5,7",
    "p_b": "0.1",
    "p_l": "0",
    "t": "d",
    "trials": "1000",
    "perfect_measurement": "false",
    "error_type": "x",
    "unit": "cycle",
    "workers": "1",
    "out": "sweep.csv",
    "figure": "true",
}

ANALYTICS_DEFAULTS = {
    "n_links": "10000",
    "p_c": "1e-6",
    "p_l": "0.35",
    "fidelity": "0.96",
    "t_g": "0.4e-9",
    "t_m": "0.567e-9",
    "t_b": "1e-6",
    "d_10": "30",
    # fitted: 100k trials at d=9, p_L=0.35, F=0.96, seed 20091
    "d_ref": "9",
    "p_ref": "0.12347",
    "cal_p_l": "0.35",
    "cal_fidelity": "0.96",
    "k": "2",
    "generators": "1",
    "calibrate": "false",
    "calibration_trials": "20000",
    "workers": "1",
}

PRESETS = {
    "fig4": {"d": "3,5,7,9,11", "p_b": "0.05:0.35:0.025", "p_l": "0", "t": "d", "trials": "20000"},
    "fig5": {"d": "3,5,7,9", "p_b": "0", "p_l": "0.30:0.60:0.025", "t": "d", "trials": "10000"},
    "fig6": {"d": "5,9,13", "p_b": "0,0.025,0.05,0.075", "p_l": "0,0.1,0.2,0.3,0.35", "t": "d", "trials": "5000"},
    "repetition": {
        "d": "3,5,7,9", "p_b": "0.85:1.0:0.0125", "p_l": "0", "t": "1",
        "perfect_measurement": "true", "trials": "20000",
    },
    "planet-scale": {"n_links": "10000", "p_c": "1e-6", "p_l": "0.35", "fidelity": "0.96"},
}


def read_config_file(path: str | Path) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[normalise_key(key)] = value
    return out


def normalise_key(key: str) -> str:
    return key.strip().lower().replace("-", "_")


def resolve(defaults: dict, preset: str | None, file: str | None, flags: dict) -> dict[str, str]:
    cfg = dict(defaults)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        cfg.update(PRESETS[preset])
    if file is not None:
        cfg.update(read_config_file(file))
    cfg.update({normalise_key(k): str(v) for k, v in flags.items() if v is not None})
    return cfg


def parse_floats(value: str) -> list[float]:
    value = value.strip()
    if not value:
        return []
    try:
        if ":" in value:
            start, stop, step = (float(v) for v in value.split(":"))
            if step <= 0:
                raise ConfigError(f"range step must be positive in {value!r}")
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + k * step, 10) for k in range(max(count, 0))]
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {value!r}") from exc


def parse_ints(value: str) -> list[int]:
    floats = parse_floats(value)
    if any(f != int(f) for f in floats):
        raise ConfigError(f"expected integers in {value!r}")
    return [int(f) for f in floats]


def parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def parse_scalar(value: str, kind=float):
    try:
        return kind(float(value)) if kind is int else kind(value)
    except ValueError as exc:
        raise ConfigError(f"expected {kind.__name__}, got {value!r}") from exc
