"""
JSON scenario configs.

Example::

    {
      "grid": {"x_min": -10, "x_max": 10, "n": 256},
      "params": {"m": 1.0, "hbar": 1.0},
      "dt": 0.00390625, "n_steps": 512,
      "psi0": {"center": 0.5, "width": 0.7071067811865476, "momentum": 0.0},
      "potential": "harmonic(1.0)",
      "gauge_field": null,
      "model": {"A": "x", "kappa": 0.1, "B": null, "C": null, "eta": 0.0},
      "corridor": "zeros"
    }

Functions are built-in names or ``{"name": ..., "coef": ...}`` objects. The
``potential`` is the physical ``V_phys``; it is mapped to the weight-functional
potential ``-V_phys / hbar`` internally.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .algebra import PhysicsParams
from .evolution import Scenario
from .models import GaugeModel, MeasurementModel, builtin_field, builtin_function, builtin_observable
from .paths import Corridor
from .states import GaussianPacket, Grid


class ConfigError(ValueError):
    """Invalid config; the message names the offending field or line."""


@dataclass
class FunctionSpec:
    name: str
    coef: float = 1.0

    def to_json(self):
        return {"name": self.name, "coef": self.coef}


@dataclass
class Config:
    scenario: Scenario
    raw: dict
    potential: Optional[FunctionSpec] = None
    gauge_field: Optional[FunctionSpec] = None
    corridor: str = "zeros"
    oracle_order: int = 4
    sections: dict = field(default_factory=dict)

    @property
    def digest(self):
        return config_digest(self.raw)

    def section(self, name):
        return self.sections.get(name, {})


def config_digest(raw):
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _get(obj, key, path, kind=float, default=..., check=None):
    where = f"{path}.{key}" if path else key
    if not isinstance(obj, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    if key not in obj or obj[key] is None:
        if default is ...:
            raise ConfigError(f"{where}: missing required field")
        return default
    value = obj[key]
    try:
        if kind is int:
            if isinstance(value, bool) or int(value) != value:
                raise ValueError
            value = int(value)
        elif kind is float:
            if isinstance(value, bool):
                raise ValueError
            value = float(value)
        elif not isinstance(value, kind):
            raise ValueError
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected {kind.__name__}, got {value!r}") from None
    if check is not None:
        message = check(value)
        if message:
            raise ConfigError(f"{where}: {message}")
    return value


def _function(obj, key, path, m):
    where = f"{path}.{key}" if path else key
    value = obj.get(key) if isinstance(obj, dict) else None
    if value is None:
        return None
    if isinstance(value, str):
        spec = FunctionSpec(value)
    elif isinstance(value, dict):
        spec = FunctionSpec(_get(value, "name", where, str), _get(value, "coef", where, float, 1.0))
    else:
        raise ConfigError(f"{where}: expected a built-in name or {{'name', 'coef'}} object")
    try:
        builtin_function(spec.name, spec.coef, m)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return spec


def _positive(v):
    return None if v > 0 else "must be positive"


def parse_config(raw):
    """Build a :class:`Config` from a decoded JSON object."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    g = raw.get("grid")
    if g is None:
        raise ConfigError("grid: missing required field")
    try:
        grid = Grid(_get(g, "x_min", "grid"), _get(g, "x_max", "grid"), _get(g, "n", "grid", int))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"grid: {exc}") from None
    pr = raw.get("params", {})
    params = PhysicsParams(_get(pr, "m", "params", float, 1.0, _positive),
                           _get(pr, "hbar", "params", float, 1.0, _positive))
    dt = _get(raw, "dt", "", float, check=_positive)
    n_steps = _get(raw, "n_steps", "", int, 0, lambda v: None if v >= 0 else "must be >= 0")
    ps = raw.get("psi0", {})
    psi0 = GaussianPacket(_get(ps, "center", "psi0", float, 0.0),
                          _get(ps, "width", "psi0", float, 1.0, _positive),
                          _get(ps, "momentum", "psi0", float, 0.0))
    potential = _function(raw, "potential", "", params.m)
    gauge_field = _function(raw, "gauge_field", "", params.m)
    for spec, where in ((potential, "potential"), (gauge_field, "gauge_field")):
        if spec is not None and builtin_function(spec.name, spec.coef, params.m)[0] != "position":
            raise ConfigError(f"{where}: must be a position-space function, got {spec.name!r}")
    gauge = GaugeModel.from_physical(
        builtin_field(potential.name, potential.coef, params.m) if potential else None,
        builtin_field(gauge_field.name, gauge_field.coef, params.m) if gauge_field else None,
        params.hbar)
    model = _model(raw.get("model", {}), params.m)
    corridor = _get(raw, "corridor", "", str, "zeros")
    if not (corridor in ("zeros", "sample") or corridor.startswith("file:")):
        raise ConfigError(f"corridor: expected 'zeros', 'sample' or 'file:<path>', got {corridor!r}")
    order = _get(raw, "oracle_order", "", int, 4,
                 lambda v: None if v in (2, 4) else "must be 2 or 4")
    scenario = Scenario(grid, params, gauge, model, dt, n_steps, psi0)
    sections = {k: raw[k] for k in ("free_propagator", "ensemble") if isinstance(raw.get(k), dict)}
    return Config(scenario, raw, potential, gauge_field, corridor, order, sections)


def _model(obj, m):
    if not isinstance(obj, dict):
        raise ConfigError("model: expected an object")
    A = _function(obj, "A", "model", m) or FunctionSpec("x")
    kappa = _get(obj, "kappa", "model", float, 0.0, lambda v: None if v >= 0 else "must be >= 0")
    B = _function(obj, "B", "model", m)
    C = _function(obj, "C", "model", m)
    eta = _get(obj, "eta", "model", float, 0.0)
    obs = {k: builtin_observable(s.name, s.coef, m) if s else None for k, s in (("A", A), ("B", B), ("C", C))}
    return MeasurementModel(obs["A"], kappa, obs["B"], obs["C"], eta)


def load_config(path):
    """Read and parse a config file; JSON syntax errors report line and column."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)


def read_corridor(path, dt):
    """Corridor samples from CSV (one per row) or JSON ``{"dt": .., "a": [..]}``."""
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".json"):
        obj = json.loads(text)
        if "dt" in obj and float(obj["dt"]) != dt:
            raise ConfigError(f"{path}: corridor dt {obj['dt']} differs from scenario dt {dt}")
        return Corridor(dt, obj["a"])
    values = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values.append(float(line.split(",")[0]))
        except ValueError:
            if not values and lineno == 1:
                continue  # header row
            raise ConfigError(f"{path}: line {lineno}: not a number: {line!r}") from None
    return Corridor(dt, values)


def corridor_to_json(c):
    return {"dt": c.dt, "a": c.a.tolist()}


def path_to_json(p):
    return {"dt": p.dt, "u": p.u.tolist()}


def path_from_json(obj):
    from .paths import Path
    return Path(float(obj["dt"]), obj["u"])


def dump_json(obj: Any, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
