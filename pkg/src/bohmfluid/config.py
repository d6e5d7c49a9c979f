"""Scenario configuration: INI-style sections grid, physics, scenario, output, kernel."""
from __future__ import annotations

import configparser
import copy
import hashlib
import json
import math

from .errors import ValidationError

SCENARIOS = ("madelung", "schrodinger", "compare", "relativistic", "nonlocal-study", "retarded-study")

# section -> key -> (type, default).  type is float, int, str, bool or "floats".
SCHEMA = {
    "grid": {"n": (int, 512), "length": (float, 40.0)},
    "physics": {
        "hbar": (float, 1.0), "mass": (float, 1.0), "kT": (float, 0.0), "c": (float, math.inf),
        "a": (str, "0"), "rho_floor": (float, 1e-12),
    },
    "scenario": {
        "name": (str, None), "t_end": (float, 1.0), "dt": (str, "auto"), "stride": (int, 10),
        "method": (str, "fd4"), "initial": (str, "gaussian"), "sigma0": (float, 1.0),
        "x0": (float, 0.0), "winding": (int, 0), "background": (float, 0.0), "amplitude": (float, 0.1),
        "v0": (float, 0.0), "potential": (str, "none"), "omega": (float, 1.0), "seed": (int, 0),
        "h_variant": (str, "printed"), "sweeps": (int, 2), "reference": (str, "none"),
        "reference_dt_factor": (int, 8), "scales": ("floats", ""), "history_dt": (float, 0.05),
        "wave_speed": (float, 0.25),
    },
    "output": {"dir": (str, ""), "snapshots": (bool, True)},
    "kernel": {
        "family": (str, "dog"), "A": (float, 2.0), "sigma1": (float, 1.0), "B": (float, 1.0),
        "sigma2": (float, 2.0), "dimension": (int, 1), "scale": (float, 1.0),
        "r": ("floats", ""), "u": ("floats", ""),
    },
}

CHOICES = {
    ("scenario", "name"): SCENARIOS,
    ("scenario", "method"): ("fd4", "spectral"),
    ("scenario", "initial"): ("gaussian", "ground", "coherent", "pulse", "random"),
    ("scenario", "potential"): ("none", "harmonic"),
    ("scenario", "h_variant"): ("printed", "quantum-stress"),
    ("scenario", "reference"): ("none", "closed_form", "schrodinger", "madelung", "fine_dt"),
    ("kernel", "family"): ("dog", "tabulated", "delta"),
}


class UnknownScenario(ValidationError):
    pass


def _parse(kind, raw):
    if kind == "floats":
        return [float(v) for v in raw.replace(",", " ").split()]
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise ValueError(raw)
    if kind is float:
        return float(raw)
    if kind is int:
        return int(raw)
    return raw.strip()


def is_numeric(key: str) -> bool:
    sec, _, k = key.partition(".")
    kind = SCHEMA.get(sec, {}).get(k, (None,))[0]
    return kind in (float, int) or key in ("scenario.dt", "physics.a")


def parse_text(text: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ValidationError(f"config syntax error: {e}") from e
    cfg = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    bad = []
    for sec in cp.sections():
        if sec not in SCHEMA:
            bad.append(sec)
            continue
        for k, raw in cp.items(sec):
            if k not in SCHEMA[sec]:
                bad.append(f"{sec}.{k}")
                continue
            try:
                cfg[sec][k] = _parse(SCHEMA[sec][k][0], raw)
            except ValueError:
                bad.append(f"{sec}.{k}")
    if bad:
        raise ValidationError("invalid or unknown config keys: " + ", ".join(bad), keys=bad)
    return validate(cfg)


def validate(cfg: dict) -> dict:
    bad = []
    name = cfg["scenario"]["name"]
    if name is None:
        bad.append("scenario.name")
    elif name not in SCENARIOS:
        raise UnknownScenario(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}", keys=["scenario.name"])
    for (sec, k), allowed in CHOICES.items():
        if k != "name" and cfg[sec][k] not in allowed:
            bad.append(f"{sec}.{k}")
    g = cfg["grid"]
    if g["n"] < 8 or g["n"] & (g["n"] - 1):
        bad.append("grid.n")
    if not g["length"] > 0:
        bad.append("grid.length")
    ph = cfg["physics"]
    for k, ok in (("hbar", ph["hbar"] >= 0), ("mass", ph["mass"] > 0), ("kT", ph["kT"] >= 0),
                  ("c", ph["c"] > 0), ("rho_floor", ph["rho_floor"] > 0)):
        if not ok:
            bad.append(f"physics.{k}")
    a = ph["a"]
    if a != "thermal":
        try:
            if not float(a) >= 0:
                bad.append("physics.a")
        except ValueError:
            bad.append("physics.a")
    elif not ph["kT"] > 0:
        bad.append("physics.a")
    sc = cfg["scenario"]
    if not sc["t_end"] > 0:
        bad.append("scenario.t_end")
    if sc["dt"] != "auto":
        try:
            if not float(sc["dt"]) > 0:
                bad.append("scenario.dt")
        except ValueError:
            bad.append("scenario.dt")
    if sc["stride"] < 1:
        bad.append("scenario.stride")
    if not sc["sigma0"] > 0:
        bad.append("scenario.sigma0")
    if sc["background"] < 0:
        bad.append("scenario.background")
    if sc["initial"] in ("ground", "coherent") and sc["potential"] != "harmonic":
        bad.append("scenario.potential")
    if name in ("relativistic", "retarded-study") and not math.isfinite(ph["c"]):
        bad.append("physics.c")
    k = cfg["kernel"]
    if k["family"] == "tabulated" and (len(k["r"]) < 2 or len(k["r"]) != len(k["u"])):
        bad += ["kernel.r", "kernel.u"]
    if k["dimension"] not in (1, 3):
        bad.append("kernel.dimension")
    if bad:
        raise ValidationError("invalid config values: " + ", ".join(dict.fromkeys(bad)), keys=bad)
    return cfg


def set_value(cfg: dict, key: str, raw: str) -> dict:
    """Copy of cfg with ``section.key`` replaced by the parsed ``raw``."""
    sec, _, k = key.partition(".")
    if sec not in SCHEMA or k not in SCHEMA[sec]:
        raise ValidationError(f"unknown config key {key!r}", keys=[key])
    if not is_numeric(key):
        raise ValidationError(f"{key} is not numeric", keys=[key])
    out = copy.deepcopy(cfg)
    kind = SCHEMA[sec][k][0]
    try:
        out[sec][k] = _parse(kind, raw) if kind in (float, int) else str(float(raw))
    except ValueError as e:
        raise ValidationError(f"value {raw!r} for {key} is not a number", keys=[key]) from e
    return validate(out)


def canonical(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, default=repr)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical(cfg).encode()).hexdigest()
