"""Run configuration: a small line-oriented key = value format.

One assignment per line, dotted keys group related settings, '#' starts a
comment.  Parsing is strict: unknown keys, duplicates, type mismatches
and out-of-range values are all structured errors naming the key, so a
typo cannot silently fall back to a default.  Serialization is canonical
(fixed key order, shortest round-trip floats), which makes the sha256
digest of a config a stable fingerprint for output headers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields

__all__ = ["ConfigError", "RunConfig", "validate_config", "serialize", "digest"]


class ConfigError(ValueError):
    """Invalid configuration; `key` holds the dotted path when known."""

    def __init__(self, key: str | None, message: str):
        self.key = key
        prefix = f"{key}: " if key else ""
        super().__init__(prefix + message)


@dataclass
class RunConfig:
    mass_heavy: float = 133.0
    mass_light: float = 6.0
    depth: float | None = None
    calibrate_to: float | None = None
    width: float = 1.0
    d_value: float | None = None
    d_range: tuple[float, float] | None = None
    d_step: float = 0.01
    n_funcs: int = 60
    n_channels: int = 3
    rho_min: float = 1e-3
    rho_max: float = 1e5
    rho_points: int = 400
    radial_min: float = 2e-3
    radial_max: float = 8e4
    radial_points: int = 2400
    density_points: int = 161
    density_span: float = 3.5
    s_values: tuple[float, ...] = (1.0,)
    state: int = 3
    sets: tuple[int, ...] = (1, 2)
    out_dir: str = "out"
    workers: int = 1

    def dimensions(self) -> list[float]:
        """The d values this config asks for, scan expanded."""
        if self.d_value is not None:
            return [self.d_value]
        lo, hi = self.d_range
        vals, i = [], 0
        while lo + i * self.d_step < hi - 1e-9 * self.d_step:
            vals.append(lo + i * self.d_step)
            i += 1
        vals.append(hi)
        return vals


# key -> (attribute, parser); parsers get (key, raw string) and return the value
def _float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(key, f"not a number: {raw!r}") from None


def _int(key: str, raw: str) -> int:
    try:
        v = int(raw)
    except ValueError:
        raise ConfigError(key, f"not an integer: {raw!r}") from None
    return v


def _floats(key: str, raw: str) -> tuple[float, ...]:
    return tuple(_float(key, tok) for tok in raw.replace(",", " ").split())


def _ints(key: str, raw: str) -> tuple[int, ...]:
    return tuple(_int(key, tok) for tok in raw.replace(",", " ").split())


def _str(key: str, raw: str) -> str:
    return raw


_KEYS = {
    "masses.heavy": ("mass_heavy", _float),
    "masses.light": ("mass_light", _float),
    "potential.depth": ("depth", _float),
    "potential.calibrate_to": ("calibrate_to", _float),
    "potential.width": ("width", _float),
    "dimension.value": ("d_value", _float),
    "dimension.range": ("d_range", _floats),
    "dimension.step": ("d_step", _float),
    "basis.n_funcs": ("n_funcs", _int),
    "basis.n_channels": ("n_channels", _int),
    "grids.rho_min": ("rho_min", _float),
    "grids.rho_max": ("rho_max", _float),
    "grids.rho_points": ("rho_points", _int),
    "grids.radial_min": ("radial_min", _float),
    "grids.radial_max": ("radial_max", _float),
    "grids.radial_points": ("radial_points", _int),
    "grids.density_points": ("density_points", _int),
    "grids.density_span": ("density_span", _float),
    "observables.s": ("s_values", _floats),
    "observables.state": ("state", _int),
    "observables.sets": ("sets", _ints),
    "output.dir": ("out_dir", _str),
    "workers": ("workers", _int),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEYS.items()}


def _check(cfg: RunConfig) -> None:
    def bad(key: str, msg: str):
        raise ConfigError(key, msg)

    if cfg.mass_heavy <= 0 or cfg.mass_light <= 0:
        bad("masses.heavy", "masses must be positive")
    if (cfg.depth is None) == (cfg.calibrate_to is None):
        bad("potential.depth", "give exactly one of depth and calibrate_to")
    if cfg.depth is not None and cfg.depth <= 0:
        bad("potential.depth", "depth must be positive (attractive well)")
    if cfg.calibrate_to is not None and not 2.0 <= cfg.calibrate_to <= 3.0:
        bad("potential.calibrate_to", "target dimension outside [2,3]")
    if cfg.width <= 0:
        bad("potential.width", "width must be positive")
    if (cfg.d_value is None) and (cfg.d_range is None):
        if cfg.calibrate_to is not None:
            cfg.d_value = cfg.calibrate_to  # run at the calibration point
        else:
            bad("dimension.value", "missing required field: a value or a range")
    if cfg.d_value is not None and cfg.d_range is not None:
        bad("dimension.value", "give either a single value or a range, not both")
    if cfg.d_value is not None and not 2.0 <= cfg.d_value <= 3.0:
        bad("dimension.value", "range outside [2,3]")
    if cfg.d_range is not None:
        if len(cfg.d_range) != 2:
            bad("dimension.range", "expected two numbers: low high")
        lo, hi = cfg.d_range
        if not (2.0 <= lo < hi <= 3.0):
            bad("dimension.range", "range outside [2,3]")
        if cfg.d_step <= 0:
            bad("dimension.step", "step must be positive")
    for key in (
        "basis.n_funcs",
        "basis.n_channels",
        "grids.rho_points",
        "grids.radial_points",
        "grids.density_points",
        "workers",
    ):
        attr = _KEYS[key][0]
        if getattr(cfg, attr) <= 0:
            bad(key, "count must be positive")
    if cfg.n_channels > cfg.n_funcs:
        bad("basis.n_channels", "more channels than basis functions")
    if not 0 < cfg.rho_min < cfg.rho_max:
        bad("grids.rho_min", "need 0 < rho_min < rho_max")
    if not 0 < cfg.radial_min < cfg.radial_max:
        bad("grids.radial_min", "need 0 < radial_min < radial_max")
    if cfg.density_span <= 0:
        bad("grids.density_span", "span must be positive")
    if not cfg.s_values:
        bad("observables.s", "need at least one scale value")
    for s in cfg.s_values:
        if not 0.0 <= s <= 1.0:
            bad("observables.s", f"scale parameter outside [0, 1]: {s}")
    if cfg.state < 0:
        bad("observables.state", "state index is counted from 0")
    for j in cfg.sets:
        if j not in (1, 2, 3):
            bad("observables.sets", f"not a Jacobi set index: {j}")


def validate_config(text: str) -> RunConfig:
    """Parse and validate the key = value text into a RunConfig."""
    cfg = RunConfig()
    seen = set()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(key, "unknown key")
        if key in seen:
            raise ConfigError(key, "duplicate key")
        seen.add(key)
        attr, parse = _KEYS[key]
        setattr(cfg, attr, parse(key, raw))
    _check(cfg)
    return cfg


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return " ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(cfg: RunConfig) -> str:
    """Canonical text form; validate_config(serialize(c)) reproduces c."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        lines.append(f"{_ATTR_TO_KEY[f.name]} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def digest(cfg: RunConfig) -> str:
    """Short stable fingerprint of the physics inputs.

    Worker count and output directory are excluded: rerunning the same
    computation with different parallelism or destination must emit
    byte-identical files.
    """
    text = "".join(
        line + "\n"
        for line in serialize(cfg).splitlines()
        if not line.startswith(("workers", "output.dir"))
    )
    return hashlib.sha256(text.encode()).hexdigest()[:12]
