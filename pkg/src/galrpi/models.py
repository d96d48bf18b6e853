"""
Observable, measurement and gauge models feeding the path weights.

Built-in function names accepted in configs::

    x, x^2, p, p^2, harmonic(w), const(c), linear(c)

``p`` and ``p^2`` act in the momentum basis, the rest in position.
``harmonic(w)`` is ``m w^2 x^2 / 2``. Every built-in is multiplied by an
optional coefficient.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

POSITION = "position"
MOMENTUM = "momentum"


@dataclass(frozen=True)
class ObservableSpec:
    """Real function applied pointwise in the position or momentum basis."""

    basis: str
    f: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    def __post_init__(self):
        if self.basis not in (POSITION, MOMENTUM):
            raise ValueError(f"basis must be {POSITION!r} or {MOMENTUM!r}, got {self.basis!r}")

    def __call__(self, q):
        return np.asarray(self.f(q), dtype=float) * np.ones_like(np.asarray(q, dtype=float))

    @classmethod
    def position(cls, f, label=""):
        return cls(POSITION, f, label)

    @classmethod
    def momentum(cls, f, label=""):
        return cls(MOMENTUM, f, label)


def _zero(x, t=0.0):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class MeasurementModel:
    """Corridor weight ``exp[-kappa (A - a)^2 - (i/hbar)(eta a B + C)]`` per unit time."""

    A: ObservableSpec = field(default_factory=lambda: ObservableSpec.position(lambda x: x, "x"))
    kappa: float = 0.0
    B: Optional[ObservableSpec] = None
    C: Optional[ObservableSpec] = None
    eta: float = 0.0

    def __post_init__(self):
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be non-negative, got {self.kappa}")

    @property
    def observables(self):
        return [o for o in (self.A, self.B, self.C) if o is not None]

    @property
    def has_dissipation(self):
        return self.B is not None or self.C is not None


@dataclass(frozen=True)
class GaugeModel:
    """Potential ``V(x, t)`` and 1-d gauge field ``A_gauge(x, t)`` of the weight functional.

    ``V`` enters as ``exp(+i int V dt)``; a physical potential ``V_phys``
    corresponds to ``V = -V_phys / hbar`` (see :meth:`from_physical`).
    """

    V: Callable = _zero
    A_gauge: Callable = _zero
    static: bool = True

    @classmethod
    def from_physical(cls, V_phys=None, A_gauge=None, hbar=1.0, static=True):
        if V_phys is None:
            V = _zero
        else:
            def V(x, t=0.0):
                return -np.asarray(V_phys(x, t), dtype=float) / hbar
        return cls(V, A_gauge or _zero, static)

    def V_phys(self, x, t, hbar):
        return -hbar * np.asarray(self.V(x, t), dtype=float) * np.ones_like(x)

    def potential(self, x, t):
        return np.asarray(self.V(x, t), dtype=float) * np.ones_like(np.asarray(x, dtype=float))

    def gauge(self, x, t):
        return np.asarray(self.A_gauge(x, t), dtype=float) * np.ones_like(np.asarray(x, dtype=float))


_BUILTIN = re.compile(r"^\s*(x\^2|x|p\^2|p|harmonic|const|linear)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def builtin_function(name, coef=1.0, m=1.0):
    """Parse a built-in name into ``(basis, f)``; ``f`` is vectorized in its argument."""
    match = _BUILTIN.match(name)
    if not match:
        raise ValueError(f"unknown built-in function {name!r}")
    kind, arg = match.group(1), match.group(2)
    if kind in ("harmonic", "const", "linear"):
        if arg is None or arg == "":
            raise ValueError(f"built-in {kind!r} needs a numeric argument, e.g. {kind}(1.0)")
        try:
            c = float(arg)
        except ValueError:
            raise ValueError(f"bad argument {arg!r} in {name!r}") from None
    elif arg is not None:
        raise ValueError(f"built-in {kind!r} takes no argument")
    coef = float(coef)
    if kind == "x":
        return POSITION, lambda q: coef * q
    if kind == "x^2":
        return POSITION, lambda q: coef * q**2
    if kind == "p":
        return MOMENTUM, lambda q: coef * q
    if kind == "p^2":
        return MOMENTUM, lambda q: coef * q**2
    if kind == "harmonic":
        return POSITION, lambda q: coef * 0.5 * m * c**2 * q**2
    if kind == "const":
        return POSITION, lambda q: coef * c * np.ones_like(q)
    return POSITION, lambda q: coef * c * q


def builtin_observable(name, coef=1.0, m=1.0):
    basis, f = builtin_function(name, coef, m)
    return ObservableSpec(basis, f, f"{coef}*{name}" if coef != 1.0 else name)


def builtin_field(name, coef=1.0, m=1.0):
    """Position-space built-in as a static ``f(x, t)``."""
    basis, f = builtin_function(name, coef, m)
    if basis != POSITION:
        raise ValueError(f"{name!r} is a momentum-basis function; fields must depend on x")
    return lambda x, t=0.0: f(np.asarray(x, dtype=float))
