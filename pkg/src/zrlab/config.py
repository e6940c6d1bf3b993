"""Run configuration in INI form.

Example::

    [scenario]
    kind = free
    t_end = 1.0

    [coefficients]
    sigma1 = 1.0
    sigma2 = 0.5
    sigma3 = -0.3
    delta = 1.0
    W = 1.0
    D = 0.8
    M = 1.2

    [grid]
    n = 64 64
    length = 30 30

Exactly one of ``[coefficients]`` and ``[physical]`` must be present.
Unknown sections and keys are rejected.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

import numpy as np

from . import soliton as sol
from .coeffs import PhysicalParams, ZRCoefficients, br_coefficients
from .simulator import GAUGED, KINDS, PERTURBED, SYMMETRIC, Scenario
from .spectral import FieldState, Grid


class ConfigError(ValueError):
    pass


REQUIRED = object()


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.replace(",", " ").split())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.replace(",", " ").split())


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none") else float(s)


def _kind(s: str) -> str:
    s = s.strip()
    if s not in KINDS:
        raise ValueError(f"must be one of {', '.join(KINDS)}")
    return s


def _family(s: str):
    s = s.strip().lower()
    if s in ("", "auto"):
        return None
    if s not in (sol.BRIGHT, sol.DARK):
        raise ValueError("must be bright, dark or auto")
    return s


INITIAL_TYPES = ("zero", "gaussian", "homogeneous", "soliton")


def _initial_type(s: str) -> str:
    s = s.strip()
    if s not in INITIAL_TYPES:
        raise ValueError(f"must be one of {', '.join(INITIAL_TYPES)}")
    return s


SCHEMA: dict[str, dict[str, tuple]] = {
    "scenario": {
        "kind": (_kind, REQUIRED),
        "t_end": (float, REQUIRED),
        "dt": (_opt_float, None),
        "eps": (float, 1.0),
        "comoving": (_bool, False),
        "dealias": (_bool, True),
    },
    "coefficients": {
        "sigma1": (float, REQUIRED),
        "sigma2": (float, REQUIRED),
        "sigma3": (float, REQUIRED),
        "delta": (float, REQUIRED),
        "W": (float, REQUIRED),
        "D": (float, REQUIRED),
        "M": (float, REQUIRED),
    },
    "physical": {
        "gamma": (float, REQUIRED),
        "mu": (float, REQUIRED),
        "k": (float, REQUIRED),
        "eps": (float, REQUIRED),
        "sigma_st": (float, 0.0),
        "alpha": (_opt_float, None),
    },
    "soliton": {
        "family": (_family, None),
        "c": (float, 0.0),
        "lam": (float, REQUIRED),
    },
    "grid": {
        "n": (_ints, REQUIRED),
        "length": (_floats, REQUIRED),
    },
    "initial": {
        "type": (_initial_type, "gaussian"),
        "amplitude": (float, 0.1),
        "width": (float, 2.0),
        "x0": (float, 0.0),
        "y0": (float, 0.0),
        "kx": (float, 0.0),
        "rho": (float, 0.0),
        "phi": (float, 0.0),
    },
    "output": {
        "directory": (str, "out"),
        "cadence": (int, 1),
        "snapshot_times": (_floats, ()),
    },
}

SECTION_ORDER = tuple(SCHEMA)


@dataclass
class RunConfig:
    sections: dict[str, dict] = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.sections[section][key]

    def has(self, section: str) -> bool:
        return section in self.sections

    @property
    def coeffs(self) -> ZRCoefficients:
        if "coefficients" in self.sections:
            c = self.sections["coefficients"]
            eps = self.sections.get("scenario", {}).get("eps", 1.0)
            return ZRCoefficients(c["sigma1"], c["sigma2"], c["sigma3"], c["delta"], c["W"], c["D"], c["M"], eps)
        return br_coefficients(self.physical)

    @property
    def physical(self) -> PhysicalParams | None:
        if "physical" not in self.sections:
            return None
        p = self.sections["physical"]
        return PhysicalParams(p["gamma"], p["mu"], p["k"], p["eps"], p["sigma_st"], p["alpha"])

    @property
    def grid(self) -> Grid:
        g = self.sections["grid"]
        return Grid(g["n"], g["length"])

    def soliton_spec(self) -> sol.SolitonSpec | None:
        if "soliton" not in self.sections:
            return None
        s = self.sections["soliton"]
        co = self.coeffs
        if self.sections.get("scenario", {}).get("comoving"):
            co = co.replace(sigma3=0.0)
        return sol.make_soliton(s["c"], s["lam"], co, s["family"])

    def background(self, grid: Grid | None = None) -> sol.SolitonBackground | None:
        spec = self.soliton_spec()
        if spec is None:
            return None
        kind = self.sections["scenario"]["kind"]
        gauged = kind in (GAUGED, SYMMETRIC)
        return sol.background(spec, grid or self.grid, gauged=gauged)

    def scenario(self) -> Scenario:
        s = self.sections["scenario"]
        g = self.grid
        bg = self.background(g) if s["kind"] in (PERTURBED, GAUGED, SYMMETRIC) else None
        return Scenario(
            kind=s["kind"],
            coeffs=self.coeffs,
            grid=g,
            t_end=s["t_end"],
            dt=s["dt"],
            eps=s["eps"],
            comoving=s["comoving"],
            background=bg,
            dealias=s["dealias"],
        )

    def initial_state(self, grid: Grid | None = None) -> FieldState:
        g = grid or self.grid
        ini = self.sections.get("initial") or _defaults("initial")
        kind = ini["type"]
        if kind == "zero":
            return FieldState.zeros(g)
        if kind == "homogeneous":
            return FieldState(
                g, np.full(g.shape, ini["amplitude"], complex), np.full(g.shape, ini["rho"]), np.full(g.shape, ini["phi"])
            )
        if kind == "soliton":
            spec = self.soliton_spec()
            if spec is None:
                raise ConfigError("initial type 'soliton' needs a [soliton] section")
            X = np.broadcast_to(g.x, g.shape)
            R = np.broadcast_to(sol.periodized_profile(spec, g), g.shape)
            psi = np.exp(1j * spec.phase_rate * X) * R
            if spec.b != 0.0:
                raise ConfigError("soliton initial data needs b = 0 so that phi is periodic (use D = 0 and c = 0)")
            return FieldState(g, psi, spec.a * R**2, g.zeros())
        mesh = g.mesh()
        r2 = (mesh[0] - ini["x0"]) ** 2
        if g.dim == 2:
            r2 = r2 + (mesh[1] - ini["y0"]) ** 2
        bump = np.exp(-r2 / ini["width"] ** 2)
        psi = ini["amplitude"] * bump * np.exp(1j * ini["kx"] * mesh[0])
        return FieldState(g, psi, ini["rho"] * bump, ini["phi"] * bump)


def _defaults(section: str) -> dict:
    out = {}
    for key, (conv, default) in SCHEMA[section].items():
        if default is REQUIRED:
            raise ConfigError(f"[{section}] {key} is required")
        out[key] = default
    return out


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            section = m.group(1).strip()
            lines[(section, "")] = i
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines[(section, m.group(1).strip())] = i
    return lines


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside any [section]") from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"line {lineno}: syntax error") from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.message if hasattr(exc, 'message') else exc}") from exc
    lines = _line_numbers(text)
    cfg = RunConfig()
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"line {lines.get((section, ''), '?')}: unknown section [{section}]")
        values = {}
        schema = SCHEMA[section]
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"line {lines.get((section, key), '?')}: unknown key {key!r} in [{section}]")
            conv = schema[key][0]
            try:
                values[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"line {lines.get((section, key), '?')}: [{section}] {key}: {exc}") from exc
        for key, (conv, default) in schema.items():
            if key not in values:
                if default is REQUIRED:
                    raise ConfigError(f"[{section}] {key} is required")
                values[key] = default
        cfg.sections[section] = values
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    has_c, has_p = cfg.has("coefficients"), cfg.has("physical")
    if has_c == has_p:
        raise ConfigError("exactly one of [coefficients] and [physical] is required")
    if cfg.has("grid"):
        g = cfg.sections["grid"]
        if len(g["n"]) != len(g["length"]):
            raise ConfigError("[grid] n and length need one entry per axis")
        try:
            cfg.grid
        except ValueError as exc:
            raise ConfigError(f"[grid] {exc}") from exc
    try:
        cfg.coeffs
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"coefficients: {exc}") from exc
    if cfg.has("soliton"):
        try:
            cfg.soliton_spec()
        except ValueError as exc:
            raise ConfigError(f"[soliton] {exc}") from exc
    if cfg.has("scenario"):
        kind = cfg.sections["scenario"]["kind"]
        if kind in (PERTURBED, GAUGED) and not cfg.has("soliton"):
            raise ConfigError(f"[scenario] kind = {kind} needs a [soliton] section")
    if cfg.has("output") and cfg.sections["output"]["cadence"] < 1:
        raise ConfigError("[output] cadence must be >= 1")


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    """Canonical text: fixed section and key order, every default spelled out."""
    out = []
    for section in SECTION_ORDER:
        if section not in cfg.sections:
            continue
        out.append(f"[{section}]")
        for key in SCHEMA[section]:
            val = cfg.sections[section][key]
            if section == "soliton" and key == "family" and val is None:
                val = "auto"
            out.append(f"{key} = {_fmt(val)}")
        out.append("")
    return "\n".join(out)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
