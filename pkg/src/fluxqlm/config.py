"""INI-style run configuration: parsing, validation, presets and emission.

Sections and keys are fixed by ``SCHEMA``; unknown sections or keys are
errors that name the offending line. ``emit`` writes a fully resolved
configuration that parses back to an equal ``RunConfig``.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError

_CHOICES = {
    "preset": ("none", "strong_coupling"),
    "gauss": ("signed", "unsigned"),
    "string_convention": ("uniform", "alternating"),
    "kind": ("ladder", "square"),
    "boundary": ("open", "periodic"),
    "hamiltonian": ("qlm", "imp", "eff"),
    "control": ("g2_elec", "g2_mag", "v", "u", "j"),
    "form": ("closed", "second_order"),
    "method": ("geometric", "single_photon"),
    "charge_element": ("exact", "tight_binding"),
}

# section -> key -> (kind, default); kind is float, int, bool, str, grid, list, units
SCHEMA = {
    "run": {"preset": ("str", "none"), "units": ("units", "eaj"), "gauss": ("str", "signed"),
            "string_convention": ("str", "alternating"), "seed": ("int", 0)},
    "device.link": {"e_c": ("float", 0.06), "e_j": ("float", 0.2), "e_l": ("float", 0.003),
                    "phi_off": ("float", 0.0), "dim": ("int", 0)},
    "device.ancilla": {"e_c": ("float", 0.2), "e_j": ("float", 1.0), "e_l": ("float", 0.01),
                       "phi_off": ("float", math.pi), "dim": ("int", 0)},
    "network": {"e_cl": ("float", 0.0002), "e_cc": ("float", 0.04), "xi": ("float", 0.0),
                "charge_element": ("str", "exact")},
    "drive": {"enabled": ("bool", False), "omega_lo": ("float", 0.95), "omega_hi": ("float", 1.05),
              "g2_lo": ("float", 0.5), "g2_hi": ("float", 1.5), "omega_center": ("float", 1.588),
              "g2_center": ("float", 0.2)},
    "geometry": {"kind": ("str", "ladder"), "l": ("int", 5), "nx": ("int", 2), "ny": ("int", 2),
                 "boundary": ("str", "open"), "loop_corner": ("int", 0), "loop_width": ("int", 1),
                 "loop_height": ("int", 1), "string_target": ("int", -1)},
    "sweep": {"hamiltonian": ("str", "qlm"), "control": ("str", "g2_elec"), "grid": ("grid", ()),
              "g2_elec": ("float", 1.0), "g2_mag": ("float", 37.5), "v": ("float", 0.0),
              "u": ("float", 75.0), "j": ("float", 1.0), "form": ("str", "closed"),
              "basis_depth": ("int", 0), "warm_start": ("bool", True),
              "observables": ("list", ("thooft_pi",))},
    "readout": {"gamma": ("float", 66.7e3), "chi": ("float", 2 * math.pi * 99.8e6),
                "kappa": ("float", 22.2e3), "eta_a": ("float", 0.919), "eta_p": ("float", 1.0),
                "n": ("int", 9), "epsilon": ("float", 0.0), "method": ("str", "geometric"),
                "varphi": ("float", math.pi)},
    "output": {"dir": ("str", "out"), "prefix": ("str", "run"), "plots": ("bool", True),
               "log_x": ("bool", True), "dump_state": ("bool", False)},
}

OBSERVABLES = ("thooft_pi", "thooft_half", "wilson_re", "wilson_im", "gauss_density", "sz2")

PRESETS = {
    "strong_coupling": {
        "device.link": {"e_c": 0.06, "e_j": 0.2, "e_l": 0.003, "phi_off": 0.0},
        "device.ancilla": {"e_c": 0.2, "e_j": 1.0, "e_l": 0.01, "phi_off": math.pi},
        "network": {"e_cl": 0.0002, "e_cc": 0.04},
    },
}


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.sections[key]

    def get(self, section: str, key: str):
        return self.sections[section][key]

    @property
    def unit_scale(self) -> float:
        u = self.sections["run"]["units"]
        return 1.0 if u == "eaj" else float(u.split(":", 1)[1])

    def grid(self) -> list:
        g = list(self.sections["sweep"]["grid"])
        if not g:
            return [self.sections["sweep"][self.sections["sweep"]["control"]]]
        return g

    def __eq__(self, other):
        return isinstance(other, RunConfig) and _canon(self.sections) == _canon(other.sections)


def _canon(sec: dict) -> dict:
    return {s: {k: (tuple(v) if isinstance(v, (list, tuple)) else v) for k, v in d.items()}
            for s, d in sec.items()}


def _line_of(text: str, section: str, key: Optional[str] = None) -> int:
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if key is not None and cur == section and re.match(rf"^{re.escape(key)}\s*[=:]", s):
            return i
    return 0


def parse_grid(text: str) -> tuple:
    """'0.1, 1, 10' or 'log:a:b:n' or 'lin:a:b:n'; must be strictly monotone."""
    text = text.strip()
    if not text:
        return ()
    if text.startswith(("log:", "lin:")):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError("expected kind:start:stop:count")
        a, b, n = float(parts[1]), float(parts[2]), int(parts[3])
        if text.startswith("log:"):
            if a <= 0 or b <= 0:
                raise ConfigError("log grid needs positive end points")
            vals = np.logspace(math.log10(a), math.log10(b), n)
        else:
            vals = np.linspace(a, b, n)
        g = tuple(float(x) for x in vals)
    else:
        g = tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    d = np.diff(g)
    if len(g) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ConfigError("grid must be strictly monotone")
    return g


def _convert(kind: str, raw: str):
    raw = raw.strip()
    if kind == "float":
        return float(raw)
    if kind == "int":
        return int(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {raw!r}")
    if kind == "grid":
        return parse_grid(raw)
    if kind == "list":
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if kind == "units":
        return parse_units(raw)
    return raw


def parse_units(raw: str) -> str:
    raw = raw.strip().lower()
    if raw == "eaj":
        return raw
    if raw.startswith("ghz:"):
        v = float(raw[4:])
        if not v > 0:
            raise ConfigError("GHz scale must be positive")
        return f"ghz:{v!r}"
    raise ConfigError("units must be 'eaj' or 'ghz:<value>'")


def _validate(sec: dict) -> None:
    def bad(path, msg):
        raise ConfigError(f"{path}: {msg}")

    for s, keys in sec.items():
        for k, v in keys.items():
            if k in _CHOICES and v not in _CHOICES[k]:
                bad(f"{s}.{k}", f"must be one of {', '.join(_CHOICES[k])}")
    for s in ("device.link", "device.ancilla"):
        d = sec[s]
        for k in ("e_c", "e_j", "e_l"):
            if not d[k] > 0:
                bad(f"{s}.{k}", "must be positive")
        if d["dim"] < 0:
            bad(f"{s}.dim", "must be >= 0 (0 = adaptive)")
    n = sec["network"]
    if not n["e_cl"] > 0:
        bad("network.e_cl", "must be positive")
    if n["e_cc"] < 0 or n["xi"] < 0:
        bad("network", "e_cc and xi must be non-negative")
    g = sec["geometry"]
    if g["kind"] == "ladder" and g["l"] < 2:
        bad("geometry.l", "ladder needs l >= 2")
    if g["kind"] == "square" and (g["nx"] < 2 or g["ny"] < 2):
        bad("geometry.nx", "square lattice needs nx, ny >= 2")
    sw = sec["sweep"]
    allowed = {"qlm": ("g2_elec", "g2_mag"), "imp": ("v", "u", "j"), "eff": ("v", "u", "j")}
    if sw["control"] not in allowed[sw["hamiltonian"]]:
        bad("sweep.control", f"{sw['control']} is not a parameter of the {sw['hamiltonian']} Hamiltonian")
    for o in sw["observables"]:
        if o not in OBSERVABLES:
            bad("sweep.observables", f"unknown observable {o!r}")
    if sw["hamiltonian"] in ("imp", "eff") and not sw["u"] > 0 and sw["control"] != "u":
        bad("sweep.u", "must be positive")
    if sw["basis_depth"] < 0:
        bad("sweep.basis_depth", "must be >= 0 (0 = full closure)")
    r = sec["readout"]
    for k in ("gamma", "kappa"):
        if r[k] < 0:
            bad(f"readout.{k}", "must be non-negative")
    if not r["chi"] > 0:
        bad("readout.chi", "must be positive")
    for k in ("eta_a", "eta_p"):
        if not 0 <= r[k] <= 1:
            bad(f"readout.{k}", "must lie in [0, 1]")


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside any section") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.ParsingError as exc:
        ln = exc.errors[0][0] if exc.errors else 0
        raise ConfigError(f"line {ln}: syntax error") from None
    sec = {s: {k: v[1] for k, v in keys.items()} for s, keys in SCHEMA.items()}
    preset = cp.get("run", "preset", fallback="none").strip() if cp.has_section("run") else "none"
    if preset != "none":
        if preset not in PRESETS:
            raise ConfigError(f"line {_line_of(text, 'run', 'preset')}: run.preset: unknown preset {preset!r}")
        for s, vals in PRESETS[preset].items():
            sec[s].update(vals)
    for s in cp.sections():
        if s not in SCHEMA:
            raise ConfigError(f"line {_line_of(text, s)}: unknown section [{s}]")
        for k, raw in cp.items(s):
            if k not in SCHEMA[s]:
                raise ConfigError(f"line {_line_of(text, s, k)}: unknown key {k!r} in [{s}]")
            try:
                sec[s][k] = _convert(SCHEMA[s][k][0], raw)
            except ValueError as exc:
                raise ConfigError(f"line {_line_of(text, s, k)}: {s}.{k}: {exc}") from None
    _validate(sec)
    return RunConfig(sec)


def default_config(preset: str = "strong_coupling") -> RunConfig:
    return parse_config(f"[run]\npreset = {preset}\n")


def _emit_value(kind: str, v) -> str:
    if kind == "float":
        return repr(float(v))
    if kind == "bool":
        return "true" if v else "false"
    if kind == "grid":
        return ", ".join(repr(float(x)) for x in v)
    if kind == "list":
        return ", ".join(v)
    return str(v)


def emit(cfg: RunConfig) -> str:
    lines = []
    for s, keys in SCHEMA.items():
        lines.append(f"[{s}]")
        for k, (kind, _) in keys.items():
            lines.append(f"{k} = {_emit_value(kind, cfg.sections[s][k])}")
        lines.append("")
    return "\n".join(lines)
