"""
Value-level Galilei group.

Elements are stored in the canonical order ``a_T r v_G``: a spacetime
translation ``a``, a rotation ``r`` and a boost velocity ``v``. Acting on a
spacetime point, the boost is applied first, then the rotation, then the
translation. All objects are immutable; every operation returns a new value.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-10
ORTHO_TOL = 1e-12
_EYE3 = np.eye(3)
_EYE3.setflags(write=False)


def _frozen(arr, shape):
    out = np.array(arr, dtype=float).reshape(shape)
    if not np.isfinite(out).all():
        raise ValueError("non-finite component")
    out.setflags(write=False)
    return out


def _readonly(arr):
    arr.setflags(write=False)
    return arr


def _drifted(g):
    # g: row-major Gram matrix, symmetric, so the upper triangle suffices;
    # scalar compares beat numpy reductions on 9 entries
    return (abs(g[0] - 1) > ORTHO_TOL or abs(g[4] - 1) > ORTHO_TOL or abs(g[8] - 1) > ORTHO_TOL
            or abs(g[1]) > ORTHO_TOL or abs(g[2]) > ORTHO_TOL or abs(g[5]) > ORTHO_TOL)


def _build(cls, **fields):
    # trusted constructor: skips validation of values derived from valid ones
    obj = object.__new__(cls)
    obj.__dict__.update(fields)
    return obj


@dataclass(frozen=True, eq=False)
class PhysicsParams:
    """Mass and Planck constant in natural units."""

    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.m > 0 and self.hbar > 0):
            raise ValueError(f"m and hbar must be positive, got m={self.m}, hbar={self.hbar}")

    def __eq__(self, other):
        if not isinstance(other, PhysicsParams):
            return NotImplemented
        return self.m == other.m and self.hbar == other.hbar

    def __hash__(self):
        return hash((self.m, self.hbar))


@dataclass(frozen=True, eq=False)
class SpacetimePoint:
    t: float
    x: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.t):
            raise ValueError("non-finite time")
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", _frozen(self.x, (3,)))

    @classmethod
    def origin(cls):
        return cls(0.0, np.zeros(3))

    def as_array(self):
        return np.concatenate(([self.t], self.x))

    def isclose(self, other, atol=ATOL):
        return abs(self.t - other.t) <= atol and bool(np.all(np.abs(self.x - other.x) <= atol))

    def __eq__(self, other):
        if not isinstance(other, SpacetimePoint):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None


def _gram_schmidt(mat):
    # modified Gram-Schmidt on the columns, keeps det sign
    q = np.array(mat, dtype=float)
    for j in range(3):
        for i in range(j):
            q[:, j] -= np.dot(q[:, i], q[:, j]) * q[:, i]
        q[:, j] /= np.linalg.norm(q[:, j])
    return q


@dataclass(frozen=True, eq=False)
class Rotation:
    """Proper rotation stored as an orthogonal 3x3 matrix."""

    mat: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        mat = np.array(self.mat, dtype=float).reshape(3, 3)
        drift = np.max(np.abs(mat.T @ mat - np.eye(3)))
        if drift > ORTHO_TOL:
            if drift > 1e-6:
                raise ValueError(f"matrix is not orthogonal (drift {drift:.3g})")
            mat = _gram_schmidt(mat)
        if abs(np.linalg.det(mat) - 1.0) > ORTHO_TOL:
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "mat", _frozen(mat, (3, 3)))

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    @classmethod
    def about_axis(cls, axis, angle):
        """Rodrigues rotation by ``angle`` about ``axis``."""
        k = np.asarray(axis, dtype=float)
        k = k / np.linalg.norm(k)
        kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        return cls(np.eye(3) + np.sin(angle) * kx + (1 - np.cos(angle)) * kx @ kx)

    def apply(self, vec):
        return self.mat @ np.asarray(vec, dtype=float)

    @classmethod
    def _product(cls, m1, m2):
        if m2 is _EYE3 and not m1.flags.writeable:
            return _build(cls, mat=m1)
        if m1 is _EYE3:
            return _build(cls, mat=m2 if not m2.flags.writeable else _readonly(m2.copy()))
        mat = m1 @ m2
        if _drifted((mat.T @ mat).ravel().tolist()):
            mat = _gram_schmidt(mat)
        return _build(cls, mat=_readonly(mat))

    def inverse(self):
        return _build(Rotation, mat=_readonly(self.mat.T.copy()))

    def __matmul__(self, other):
        return Rotation._product(self.mat, other.mat)

    def isclose(self, other, atol=ATOL):
        return bool(np.all(np.abs(self.mat - other.mat) <= atol))

    def __eq__(self, other):
        if not isinstance(other, Rotation):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GalileiElement:
    """Group element ``a_T r v_G``."""

    a: SpacetimePoint = field(default_factory=SpacetimePoint.origin)
    r: Rotation = field(default_factory=Rotation.identity)
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "v", _frozen(self.v, (3,)))

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def translation(cls, t, x):
        return cls(a=SpacetimePoint(t, x))

    @classmethod
    def boost(cls, v):
        return cls(v=v)

    @classmethod
    def rotation(cls, r):
        return cls(r=r if isinstance(r, Rotation) else Rotation(r))

    @property
    def rotation_free(self):
        return bool((self.r.mat == _EYE3).all())

    def isclose(self, other, atol=ATOL):
        return (self.a.isclose(other.a, atol)
                and self.r.isclose(other.r, atol)
                and bool(np.all(np.abs(self.v - other.v) <= atol)))

    def __eq__(self, other):
        if not isinstance(other, GalileiElement):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def __mul__(self, other):
        return compose(self, other)

    def to_json(self):
        return {"a": self.a.as_array().tolist(), "r": self.r.mat.tolist(), "v": self.v.tolist()}

    @classmethod
    def from_json(cls, obj):
        a = np.asarray(obj["a"], dtype=float)
        if a.shape != (4,):
            raise ValueError("'a' must be [t, x, y, z]")
        return cls(a=SpacetimePoint(a[0], a[1:]), r=Rotation(obj["r"]), v=obj["v"])


def _boost_point(v, t, x):
    return t, x + t * v


def _point(t, x):
    return _build(SpacetimePoint, t=t, x=_readonly(x))


def act(g, x):
    """Apply ``g`` to the spacetime point ``x``: boost, rotate, translate."""
    t, pos = _boost_point(g.v, x.t, x.x)
    return _point(t + g.a.t, g.r.mat @ pos + g.a.x)


def compose(g, h):
    """Canonical form of the product ``gh``."""
    # v_g a_h v_g^-1 = (v_g a_h)_T, then r_g carries it through
    t, pos = _boost_point(g.v, h.a.t, h.a.x)
    a = _point(g.a.t + t, g.a.x + g.r.mat @ pos)
    r = Rotation._product(g.r.mat, h.r.mat)
    # v_g r_h = r_h (r_h^-1 v_g)_G
    v = h.r.mat.T @ g.v + h.v
    return _build(GalileiElement, a=a, r=r, v=_readonly(v))


def inverse(g):
    rinv = g.r.mat.T
    # (a r v)^-1 = (-v)_G r^-1 (-a)_T, normalized
    t, pos = _boost_point(-g.v, -g.a.t, -(rinv @ g.a.x))
    return _build(GalileiElement, a=_point(t, pos), r=g.r.inverse(), v=_readonly(-(g.r.mat @ g.v)))


def multiplicator_phase(g, h, params):
    """Phase angle of :func:`multiplicator`."""
    v = g.v
    return params.m / params.hbar * (float(v @ h.a.x) + 0.5 * float(v @ v) * h.a.t)


def multiplicator(g, h, params):
    """Projective multiplicator ``exp[i (m/hbar)(v_g.a_h + |v_g|^2 a_h^0 / 2)]``.

    Only the boost of ``g`` and the translation of ``h`` enter.
    """
    return cmath.exp(1j * multiplicator_phase(g, h, params))


def _quaternion_matrix(q):
    w, x, y, z = q / math.sqrt(float(q @ q))
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def element_from_draws(u, q=None):
    """Element from 7 components ``(t, x, y, z, vx, vy, vz)`` and an optional quaternion ``q``."""
    if q is None:
        r = _build(Rotation, mat=_EYE3)
    else:
        r = Rotation._product(_quaternion_matrix(q), _EYE3)
    return _build(GalileiElement, a=_point(float(u[0]), u[1:4]), r=r, v=_readonly(u[4:]))


def random_element(rng, scale=1.0, rotations=True):
    """Random element with components of order ``scale``; rotations are Haar-uniform."""
    u = rng.uniform(-scale, scale, 7)
    # a normalized Gaussian 4-vector is a uniform unit quaternion
    return element_from_draws(u, rng.standard_normal(4) if rotations else None)


def random_point_from(u):
    return _point(float(u[0]), u[1:])


def random_point(rng, scale=1.0):
    return random_point_from(rng.uniform(-scale, scale, 4))
