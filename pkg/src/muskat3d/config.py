"""Run configuration: an INI file of ``key = value`` lines in named sections.

Unknown sections and keys are rejected so that a typo cannot silently fall
back to a default. Every validation error names the offending key.

Schema (units in brackets):

[grid]        n (points per axis, power of two), period [length]
[physics]     rho (density jump, > 0), eps (viscosity of the regularizing
              Laplacian, >= 0), muskat (include the nonlocal term),
              theorem_constant (C in the smallness criterion)
[time]        scheme (rk4 | ifrk4), cfl, t_final [time], dt [time, optional],
              report_every [time, optional: every step when absent]
[quadrature]  radial, angular (multiple of 4), r_min_factor [L/n],
              r_outer_factor [L], inner (taylor | drop), tail_order
[initial]     profile, amplitude, mode_x, mode_y, sigma, k_target, width,
              slope, kmax, file (snapshot path for profile = file)
[output]      directory, format (csv | json | both)
[run]         seed
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from .grid import TWO_PI
from .quadrature import PvQuadrature

SCHEMES = ("rk4", "ifrk4")
FORMATS = ("csv", "json", "both")
PROFILE_NAMES = ("zero", "single_mode", "gaussian_bump", "steep_ridge", "random_bandlimited", "file")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class GridSection:
    n: int
    period: float = TWO_PI


@dataclass(frozen=True)
class PhysicsSection:
    rho: float = TWO_PI
    eps: float = 0.0
    muskat: bool = True
    theorem_constant: float = 0.125


@dataclass(frozen=True)
class TimeSection:
    t_final: float
    scheme: str = "rk4"
    cfl: float = 0.25
    dt: float | None = None
    report_every: float | None = None


@dataclass(frozen=True)
class QuadratureSection:
    radial: int = 48
    angular: int = 32
    r_min_factor: float = 0.25
    r_outer_factor: float = 0.5
    inner: str = "taylor"
    tail_order: int = 4


@dataclass(frozen=True)
class InitialSection:
    profile: str = "zero"
    amplitude: float = 1.0
    mode_x: int = 1
    mode_y: int = 0
    sigma: float = 0.3
    k_target: float = 1.0
    width: float = 0.5
    slope: float = 1.0
    kmax: int = 4
    file: str = ""


@dataclass(frozen=True)
class OutputSection:
    directory: str = "output"
    format: str = "both"


@dataclass(frozen=True)
class RunSection:
    seed: int = 0


@dataclass(frozen=True)
class SimConfig:
    grid: GridSection
    time: TimeSection
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    quadrature: QuadratureSection = field(default_factory=QuadratureSection)
    initial: InitialSection = field(default_factory=InitialSection)
    output: OutputSection = field(default_factory=OutputSection)
    run: RunSection = field(default_factory=RunSection)

    def __post_init__(self):
        validate(self)

    def pv_quadrature(self) -> PvQuadrature:
        q = self.quadrature
        return PvQuadrature(q.radial, q.angular, q.r_min_factor, q.r_outer_factor, q.inner, q.tail_order)

    def replace(self, **sections) -> "SimConfig":
        """Copy with whole sections or single keys replaced: ``replace(time={"t_final": 2})``."""
        kw = {}
        for name, val in sections.items():
            cur = getattr(self, name)
            kw[name] = dataclasses.replace(cur, **val) if isinstance(val, dict) else val
        return dataclasses.replace(self, **kw)

    def digest(self) -> str:
        """SHA-256 of the canonical text form."""
        return hashlib.sha256(dumps_config(self).encode()).hexdigest()


SECTIONS = {
    "grid": GridSection,
    "physics": PhysicsSection,
    "time": TimeSection,
    "quadrature": QuadratureSection,
    "initial": InitialSection,
    "output": OutputSection,
    "run": RunSection,
}


def _fail(section: str, key: str, msg: str):
    raise ConfigError(f"[{section}] {key}: {msg}")


def _check(cond: bool, section: str, key: str, msg: str):
    if not cond:
        _fail(section, key, msg)


def validate(cfg: SimConfig):
    g, p, t, q, i, o = cfg.grid, cfg.physics, cfg.time, cfg.quadrature, cfg.initial, cfg.output
    _check(isinstance(g.n, int) and g.n >= 4 and g.n & (g.n - 1) == 0, "grid", "n", f"must be a power of two >= 4, got {g.n}")
    _check(math.isfinite(g.period) and g.period > 0, "grid", "period", f"must be positive, got {g.period}")
    _check(math.isfinite(p.rho) and p.rho > 0, "physics", "rho", f"must be positive (stable regime), got {p.rho}")
    _check(math.isfinite(p.eps) and p.eps >= 0, "physics", "eps", f"must be >= 0, got {p.eps}")
    _check(math.isfinite(p.theorem_constant) and p.theorem_constant > 0, "physics", "theorem_constant", "must be positive")
    _check(t.scheme in SCHEMES, "time", "scheme", f"must be one of {SCHEMES}, got {t.scheme!r}")
    _check(math.isfinite(t.cfl) and 0 < t.cfl <= 2, "time", "cfl", f"must be in (0, 2], got {t.cfl}")
    _check(math.isfinite(t.t_final) and t.t_final >= 0, "time", "t_final", f"must be >= 0, got {t.t_final}")
    _check(t.dt is None or (math.isfinite(t.dt) and t.dt > 0), "time", "dt", f"must be positive, got {t.dt}")
    _check(
        t.report_every is None or (math.isfinite(t.report_every) and t.report_every > 0),
        "time", "report_every", f"must be positive, got {t.report_every}",
    )
    _check(q.radial >= 2, "quadrature", "radial", f"must be >= 2, got {q.radial}")
    _check(q.angular >= 4 and q.angular % 4 == 0, "quadrature", "angular", f"must be a positive multiple of 4, got {q.angular}")
    _check(q.r_min_factor > 0, "quadrature", "r_min_factor", "must be positive")
    _check(q.r_outer_factor > 0, "quadrature", "r_outer_factor", "must be positive")
    _check(q.r_outer_factor * g.n > q.r_min_factor, "quadrature", "r_outer_factor", "outer radius must exceed r_min")
    _check(q.inner in ("taylor", "drop"), "quadrature", "inner", f"must be 'taylor' or 'drop', got {q.inner!r}")
    _check(0 <= q.tail_order <= 8, "quadrature", "tail_order", f"must be in [0, 8], got {q.tail_order}")
    _check(i.profile in PROFILE_NAMES, "initial", "profile", f"must be one of {PROFILE_NAMES}, got {i.profile!r}")
    _check(math.isfinite(i.amplitude), "initial", "amplitude", "must be finite")
    _check(i.sigma > 0, "initial", "sigma", "must be positive")
    _check(i.k_target >= 0, "initial", "k_target", "must be >= 0")
    _check(i.width > 0, "initial", "width", "must be positive")
    _check(i.slope >= 0, "initial", "slope", "must be >= 0")
    _check(
        i.profile != "random_bandlimited" or 1 <= i.kmax < g.n // 2,
        "initial", "kmax", f"must be in [1, n/2), got {i.kmax}",
    )
    _check(i.profile != "file" or bool(i.file), "initial", "file", "required when profile = file")
    _check(o.format in FORMATS, "output", "format", f"must be one of {FORMATS}, got {o.format!r}")


def _convert(section: str, key: str, raw: str, typ):
    text = raw.strip()
    try:
        if typ == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ == "int":
            return int(text)
        if typ == "float":
            return float(text)
        if typ == "optfloat":
            return None if text.lower() in ("", "none") else float(text)
        return text
    except ValueError:
        _fail(section, key, f"cannot parse {raw!r} as {typ}")


def _field_type(f: dataclasses.Field) -> str:
    t = str(f.type)
    if "None" in t:
        return "optfloat"
    return {"int": "int", "float": "float", "bool": "bool"}.get(t, "str")


def loads_config(text: str, source: str = "<string>") -> SimConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: parse error: {exc}") from exc
    unknown = set(parser.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}")
    kwargs = {}
    for name, cls in SECTIONS.items():
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        if parser.has_section(name):
            for key, raw in parser.items(name):
                if key not in fields:
                    _fail(name, key, "unknown key")
                values[key] = _convert(name, key, raw, _field_type(fields[key]))
        missing = [
            k for k, f in fields.items()
            if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING and k not in values
        ]
        if missing:
            _fail(name, missing[0], "required key is missing")
        kwargs[name] = cls(**values)
    return SimConfig(**kwargs)


def load_config(path) -> SimConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return loads_config(path.read_text(), str(path))


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps_config(cfg: SimConfig) -> str:
    out = io.StringIO()
    for name in SECTIONS:
        sec = getattr(cfg, name)
        out.write(f"[{name}]\n")
        for f in dataclasses.fields(sec):
            out.write(f"{f.name} = {_format(getattr(sec, f.name))}\n")
        out.write("\n")
    return out.getvalue()


def save_config(cfg: SimConfig, path) -> None:
    from .io import atomic_write_text

    atomic_write_text(Path(path), dumps_config(cfg))
