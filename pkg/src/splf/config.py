"""Sectioned key-value config files and the default presets.

    [dimension]
    d = 2
    [fluid]
    p = 3
    nu = 0.1
    [noise]
    scale = 1.0
    decay = auto
    [time]
    dt = 0.001
    T = 0.25
    scheme = explicit
    [experiment]
    n = 8
    seed = 0

``auto`` (or ``none``) selects the built-in default for optional values.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import fields

from .errors import ConfigurationError
from .integrator import SimConfig

# (section, key) -> SimConfig field
LAYOUT = {
    ("dimension", "d"): "d",
    ("fluid", "p"): "p",
    ("fluid", "nu"): "nu",
    ("fluid", "advection"): "advection",
    ("fluid", "viscous"): "viscous",
    ("noise", "scale"): "noise_scale",
    ("noise", "decay"): "noise_decay",
    ("time", "dt"): "dt",
    ("time", "T"): "T",
    ("time", "scheme"): "scheme",
    ("time", "stabilization"): "stabilization",
    ("experiment", "n"): "n",
    ("experiment", "seed"): "seed",
    ("experiment", "init"): "init",
    ("experiment", "init_amplitude"): "init_amplitude",
    ("experiment", "init_smoothness"): "init_smoothness",
    ("experiment", "dealias_factor"): "dealias_factor",
    ("experiment", "check_regime"): "check_regime",
}
# run-control keys that are not part of the simulated model
EXTRAS = {("experiment", "stride"): 1, ("experiment", "paths"): 16, ("experiment", "workers"): 0}
SECTIONS = ("dimension", "fluid", "noise", "time", "experiment")

_TYPES = {f.name: f.type for f in fields(SimConfig)}
_OPTIONAL = {"noise_decay", "init_smoothness", "stabilization"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(name, raw):
    text = raw.strip()
    if name in _OPTIONAL and text.lower() in ("auto", "none", ""):
        return None
    kind = _TYPES[name]
    try:
        if kind == "bool":
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "str":
            return text
        return float(text)
    except ValueError:
        raise ConfigurationError(f"cannot parse {text!r}", name) from None


def parse_config(text):
    """Return ``(SimConfig, extras)`` from config text."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(str(exc).splitlines()[0], "config") from None
    values, extras = {}, {k[1]: v for k, v in EXTRAS.items()}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigurationError(f"unknown section [{section}]", section)
        for key, raw in parser.items(section):
            if (section, key) in LAYOUT:
                name = LAYOUT[(section, key)]
                values[name] = _convert(name, raw)
            elif (section, key) in EXTRAS:
                try:
                    extras[key] = int(raw)
                except ValueError:
                    raise ConfigurationError(f"cannot parse {raw!r}", f"{section}.{key}") from None
            else:
                raise ConfigurationError("unknown key", f"{section}.{key}")
    try:
        cfg = SimConfig(**values)
    except ConfigurationError as exc:
        field = exc.field
        for (section, key), name in LAYOUT.items():
            if name == field:
                raise ConfigurationError(str(exc).split(": ", 1)[-1], f"{section}.{key}") from None
        raise
    return cfg, extras


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(value):
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolved_items(cfg, extras=None):
    """(section, key, value-text) for every setting, defaults filled in."""
    resolved = cfg.resolved()
    out = []
    for section in SECTIONS:
        for (sec, key), name in LAYOUT.items():
            if sec == section:
                out.append((sec, key, _fmt(resolved[name])))
        for (sec, key), default in EXTRAS.items():
            if sec == section and extras is not None:
                out.append((sec, key, _fmt(extras.get(key, default))))
    return out


def dump_config(cfg, extras=None):
    buf = io.StringIO()
    current = None
    for section, key, value in resolved_items(cfg, extras):
        if section != current:
            if current is not None:
                buf.write("\n")
            buf.write(f"[{section}]\n")
            current = section
        buf.write(f"{key} = {value}\n")
    return buf.getvalue()


PRESETS = {
    "2d-newtonian": dict(d=2, p=2.0, nu=0.1, n=8, dt=1e-3, T=0.25, scheme="explicit"),
    "2d-thickening": dict(d=2, p=3.0, nu=0.1, n=8, dt=1e-3, T=0.25, scheme="explicit"),
    "3d-boundary": dict(d=3, p=2.5, nu=0.1, n=4, dt=5e-4, T=0.1, scheme="explicit"),
    "3d-thickening": dict(d=3, p=3.0, nu=0.1, n=4, dt=5e-4, T=0.1, scheme="explicit"),
}


def preset(name, **overrides):
    try:
        base = dict(PRESETS[name])
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", "preset") from None
    base.update(overrides)
    return SimConfig(**base)
