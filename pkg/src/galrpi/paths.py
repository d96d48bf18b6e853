"""
Discretized paths, boost records and measurement corridors.

A path is stored as its velocity samples on slices of width ``dt``; no
absolute position is kept, so two curves that differ by a constant shift are
the same path. Velocities are piecewise constant on each slice and integrals
over a path are left-endpoint sums, which split exactly at slice boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GridMismatchError


def _samples(values, dims=(1, 3)):
    arr = np.array(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a sequence of vectors, got shape {arr.shape}")
    if arr.shape[0] and arr.shape[1] not in dims:
        raise DimensionError(f"sample dimension must be one of {dims}, got {arr.shape[1]}")
    if not np.isfinite(arr).all():
        raise ValueError("non-finite samples")
    arr.setflags(write=False)
    return arr


def _check_dt(dt):
    dt = float(dt)
    if not dt > 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    return dt


def _match(p, q, what="samples", same_length=True):
    if p.dt != q.dt:
        raise GridMismatchError(f"slice widths differ: {p.dt} vs {q.dt}")
    if same_length and len(p) != len(q):
        raise GridMismatchError(f"{what} lengths differ: {len(p)} vs {len(q)}")


class _Sampled:
    dt: float

    def __len__(self):
        return len(self._data)

    @property
    def duration(self):
        return len(self) * self.dt

    @property
    def times(self):
        """Left endpoints of the slices, measured from the start of the record."""
        return self.dt * np.arange(len(self))


@dataclass(frozen=True, eq=False)
class Path(_Sampled):
    """Shift-equivalence class of a trajectory, given by velocity samples."""

    dt: float
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dt", _check_dt(self.dt))
        object.__setattr__(self, "u", _samples(self.u))

    @property
    def _data(self):
        return self.u

    @property
    def dim(self):
        return self.u.shape[1]

    @classmethod
    def empty(cls, dt, dim=1):
        return cls(dt, np.zeros((0, dim)))

    @classmethod
    def from_positions(cls, dt, x):
        """Class of the curve through the points ``x[0], ..., x[N]``."""
        x = np.array(x, dtype=float)
        return cls(dt, np.diff(x, axis=0) / dt)

    def positions(self, start):
        """Slice endpoints ``x_0 .. x_N`` of the member curve starting at ``start``."""
        steps = np.cumsum(self.u * self.dt, axis=0)
        start = np.broadcast_to(np.asarray(start, dtype=float), (self.dim,))
        return np.vstack([start, start + steps])

    def __eq__(self, other):
        if not isinstance(other, Path):
            return NotImplemented
        return self.dt == other.dt and self.u.shape == other.u.shape and bool((self.u == other.u).all())

    __hash__ = None


@dataclass(frozen=True, eq=False)
class VelocityRecord(_Sampled):
    """Time-dependent boost ``[v]`` sampled on the interval where it acts."""

    dt: float
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dt", _check_dt(self.dt))
        object.__setattr__(self, "v", _samples(self.v))

    @property
    def _data(self):
        return self.v

    def __add__(self, other):
        _match(self, other)
        return VelocityRecord(self.dt, self.v + other.v)

    def __neg__(self):
        return VelocityRecord(self.dt, -self.v)

    def __eq__(self, other):
        if not isinstance(other, VelocityRecord):
            return NotImplemented
        return self.dt == other.dt and self.v.shape == other.v.shape and bool((self.v == other.v).all())

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Corridor(_Sampled):
    """Scalar measurement readout ``a(t_k)`` on consecutive slices."""

    dt: float
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dt", _check_dt(self.dt))
        a = np.array(self.a, dtype=float).reshape(-1)
        if not np.isfinite(a).all():
            raise ValueError("non-finite corridor samples")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)

    @property
    def _data(self):
        return self.a

    @classmethod
    def zeros(cls, dt, n):
        return cls(dt, np.zeros(n))

    def split(self, k):
        return Corridor(self.dt, self.a[:k]), Corridor(self.dt, self.a[k:])

    def __eq__(self, other):
        if not isinstance(other, Corridor):
            return NotImplemented
        return self.dt == other.dt and self.a.shape == other.a.shape and bool((self.a == other.a).all())

    __hash__ = None


def concat(p, q):
    """Prolong path ``p`` by path ``q``."""
    _match(p, q, same_length=False)
    if len(p) == 0:
        return q
    if len(q) == 0:
        return p
    if p.dim != q.dim:
        raise DimensionError(f"cannot join {p.dim}-d and {q.dim}-d paths")
    return Path(p.dt, np.vstack([p.u, q.u]))


def concat_corridor(c1, c2):
    _match(c1, c2, same_length=False)
    return Corridor(c1.dt, np.concatenate([c1.a, c2.a]))


def _velocities(p, w):
    _match(p, w, "path/record")
    if len(p) and p.u.shape[1] != w.v.shape[1]:
        raise DimensionError("path and record dimensions differ")
    return p.u, w.v


def boost(p, w):
    """Path ``[u + v]`` obtained by conjugating ``[u]`` with the boost record ``[v]``."""
    u, v = _velocities(p, w)
    return Path(p.dt, u + v)


def displacement(p):
    """Net displacement ``dt * sum_k u_k``."""
    if len(p) == 0:
        return np.zeros(p.u.shape[1])
    return p.dt * p.u.sum(axis=0)


def extension_multiplicator_phase(p, w, params):
    u, v = _velocities(p, w)
    terms = (u * v).sum(axis=1) + 0.5 * (v * v).sum(axis=1)
    return params.m / params.hbar * p.dt * math.fsum(terms)


def extension_multiplicator(p, w, params):
    """Central-extension phase ``exp[i (m/hbar) dt sum_k (u_k.v_k + |v_k|^2/2)]``.

    The exponent is accumulated with an exactly rounded sum so that the
    phase of a concatenation equals the product of the phases of its parts.
    """
    return np.exp(1j * extension_multiplicator_phase(p, w, params))


def rotate(p, r):
    if len(p) and p.dim != 3:
        raise DimensionError("rotation needs 3-d velocity samples")
    mat = r.mat if hasattr(r, "mat") else np.asarray(r, dtype=float)
    if len(p) == 0:
        return p
    return Path(p.dt, p.u @ mat.T)
