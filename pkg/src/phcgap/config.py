"""Plain-text run configuration: one ``key = value`` per line, ``#`` comments."""
from __future__ import annotations

from dataclasses import fields

from .optimizer import RunConfig


class ConfigError(ValueError):
    """Bad configuration; the message names the key and, when known, the line."""


# dotted key -> RunConfig field
KEYS = {
    "lattice.n": "n",
    "polarization": "polarization",
    "band.m": "m",
    "material.eps_min": "eps_min",
    "material.eps_max": "eps_max",
    "kpath.n_k": "n_k",
    "subspace.r_l": "r_l",
    "subspace.r_u": "r_u",
    "outer.tol": "tol",
    "outer.max_iter": "max_outer",
    "outer.move_limit": "move_limit",
    "init.kind": "init_kind",
    "init.seed": "seed",
    "init.radius": "radius",
    "init.thickness": "thickness",
    "init.file": "init_file",
    "restarts": "restarts",
    "solver.tol": "solver_tol",
    "eig.method": "eig_method",
    "eig.guard": "guard_bands",
    "output.dir": "output_dir",
    "output.snapshots": "snapshots",
}

_FIELD_TO_KEY = {v: k for k, v in KEYS.items()}

_INT = {"n", "m", "n_k", "max_outer", "seed", "restarts", "guard_bands"}
_FLOAT = {"eps_min", "eps_max", "r_l", "r_u", "tol", "radius", "thickness", "solver_tol"}
_OPT_FLOAT = {"move_limit"}
_BOOL = {"snapshots"}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(name: str, raw: str):
    if name in _INT:
        return int(raw)
    if name in _FLOAT:
        return float(raw)
    if name in _OPT_FLOAT:
        return None if raw.lower() in ("none", "") else float(raw)
    if name in _BOOL:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if name == "polarization":
        return raw.upper()
    return raw


def parse_assignments(text: str, source: str = "<config>") -> dict:
    """``{field: value}`` from config text, converting types but not validating ranges."""
    values: dict = {}
    lines: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {body!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        name = KEYS[key]
        try:
            values[name] = _convert(name, raw.strip("\"'"))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
        lines[name] = lineno
    values["_lines"] = lines
    return values


def build_config(values: dict, source: str = "<config>") -> RunConfig:
    """Validated :class:`RunConfig`; constraint errors name the offending key."""
    values = dict(values)
    lines = values.pop("_lines", {})
    try:
        return RunConfig(**values)
    except ValueError as exc:
        msg = str(exc)
        # point at the key whose field name the message mentions, if any
        hit = next(
            (f.name for f in fields(RunConfig) if f.name in values and _mentions(msg, f.name)),
            None,
        )
        if hit is None:
            raise ConfigError(f"{source}: {msg}") from None
        where = f"{source}:{lines[hit]}" if hit in lines else source
        raise ConfigError(f"{where}: {_FIELD_TO_KEY.get(hit, hit)}: {msg}") from None


def _mentions(msg: str, name: str) -> bool:
    aliases = {
        "n": ("grid side",),
        "m": ("band index",),
        "init_kind": ("init kind",),
        "init_file": ("init.file",),
        "max_outer": ("max_outer",),
        "guard_bands": ("guard_bands",),
    }
    return any(a in msg for a in aliases.get(name, (name,)))


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate config text; omitted keys take the :class:`RunConfig` defaults."""
    return build_config(parse_assignments(text, source), source)


def parse_override(item: str) -> tuple:
    """``'key=value'`` from the command line as a config line."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = (s.strip() for s in item.split("=", 1))
    return key, raw
