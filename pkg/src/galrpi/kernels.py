"""
Weight functionals on discretized paths and the free propagator.

All weights are evaluated on slices of width ``dt``. Exponents are
accumulated with exactly rounded sums (:func:`math.fsum`) so that a weight of
a concatenated path equals the product of the weights of its parts up to the
rounding of a single ``exp``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GridMismatchError, UnsupportedModelError
from .models import MOMENTUM, POSITION
from .paths import Path, _check_dt

DEFAULT_EPS = 1e-4


@dataclass(frozen=True, eq=False)
class MomentumPath:
    """Momentum samples ``p_k`` on slices of width ``dt`` (1-d)."""

    dt: float
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dt", _check_dt(self.dt))
        p = np.array(self.p, dtype=float).reshape(-1)
        if not np.isfinite(p).all():
            raise ValueError("non-finite momentum samples")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    def __len__(self):
        return len(self.p)

    @property
    def duration(self):
        return len(self) * self.dt


def concat_momentum(p1, p2):
    if p1.dt != p2.dt:
        raise GridMismatchError(f"slice widths differ: {p1.dt} vs {p2.dt}")
    return MomentumPath(p1.dt, np.concatenate([p1.p, p2.p]))


def _fsum_complex(values):
    values = np.asarray(values, dtype=complex)
    return complex(math.fsum(values.real), math.fsum(values.imag))


def _one_d(path):
    if len(path) and path.dim != 1:
        raise DimensionError("weights are defined for 1-d paths only")
    return path.u[:, 0] if len(path) else np.zeros(0)


def _matched(a, b):
    if a.dt != b.dt:
        raise GridMismatchError(f"slice widths differ: {a.dt} vs {b.dt}")
    if len(a) != len(b):
        raise GridMismatchError(f"lengths differ: {len(a)} vs {len(b)}")


def action_phase(pp, xp, params):
    """``exp[(i/hbar) dt sum_k (p_k u_k - p_k^2 / 2m)]``."""
    _matched(pp, xp)
    u = _one_d(xp)
    p = pp.p
    phase = math.fsum(p * u - p * p / (2 * params.m)) * pp.dt / params.hbar
    return cmath.exp(1j * phase)


def _midpoints(xp, x0):
    x = xp.positions(x0)[:, 0] if len(xp) else np.array([float(x0)])
    return x, 0.5 * (x[:-1] + x[1:])


def gauge_weight(xp, x0, t0, g):
    """Potential and gauge-field weight of the curve starting at ``(x0, t0)``.

    Returns ``exp[i sum_k (V(xbar_k, t_k) dt + A(xbar_k, t_k)(x_{k+1} - x_k))]``
    with slice midpoints ``xbar_k``.
    """
    _one_d(xp)
    if len(xp) == 0:
        return 1.0 + 0.0j
    x, xbar = _midpoints(xp, x0)
    t = t0 + xp.times
    terms = g.potential(xbar, t) * xp.dt + g.gauge(xbar, t) * np.diff(x)
    return cmath.exp(1j * math.fsum(terms))


def _observable_on(obs, path, start):
    if isinstance(path, MomentumPath):
        if obs.basis != MOMENTUM:
            raise UnsupportedModelError(f"position-basis observable {obs.label!r} on a momentum path")
        return obs(path.p)
    if obs.basis != POSITION:
        raise UnsupportedModelError(f"momentum-basis observable {obs.label!r} on a position path")
    return obs(_midpoints(path, start)[1])


def decoherence_exponent(path, start, c, model, params):
    _matched(path, c)
    if isinstance(path, Path):
        _one_d(path)
    if len(c) == 0:
        return 0j
    a = c.a
    terms = np.zeros(len(c), dtype=complex)
    if model.kappa:
        A = _observable_on(model.A, path, start)
        terms -= model.kappa * (A - a) ** 2
    if model.B is not None and model.eta:
        terms -= 1j / params.hbar * model.eta * a * _observable_on(model.B, path, start)
    if model.C is not None:
        terms -= 1j / params.hbar * _observable_on(model.C, path, start)
    return _fsum_complex(terms) * c.dt


def decoherence_weight(path, start, c, model, params):
    """Corridor weight of a trajectory.

    ``exp[sum_k dt (-kappa (A_k - a_k)^2 - (i/hbar)(eta a_k B_k + C_k))]``

    For a position :class:`~galrpi.paths.Path` the observables are evaluated at
    slice midpoints of the curve starting at ``start``; for a
    :class:`MomentumPath` they take the momentum samples directly and
    ``start`` is ignored. Observables in the other basis are rejected.
    """
    return cmath.exp(decoherence_exponent(path, start, c, model, params))


def free_kernel(dx, dtau, params):
    """Free-particle propagator ``sqrt(m / (2 pi i hbar dtau)) exp[i m dx^2 / (2 hbar dtau)]``.

    ``dx`` may be an array, and may be complex (the kernel is entire in
    ``dx``), which is used for contour quadrature.
    """
    if not dtau > 0:
        raise ValueError(f"dtau must be positive, got {dtau}")
    m, hbar = params.m, params.hbar
    norm = math.sqrt(m / (2 * math.pi * hbar * dtau)) * cmath.exp(-0.25j * math.pi)
    return norm * np.exp(1j * m * np.asarray(dx) ** 2 / (2 * hbar * dtau))


def regularized_boost_integral(dx, dtau, eps, params):
    """Closed form of the damped boost integral, for reference.

    ``int dv exp[-eps v^2 + (i/hbar)(m v dx - m v^2 dtau / 2)]``
    """
    alpha = eps + 0.5j * params.m * dtau / params.hbar
    b = params.m * np.asarray(dx, dtype=float) / params.hbar
    return np.sqrt(np.pi / alpha) * np.exp(-b**2 / (4 * alpha))


def free_kernel_via_boost_integral(dx, dtau, eps=DEFAULT_EPS, params=None):
    """Free kernel from trapezoid quadrature of the damped boost integral.

    The integrand ``exp{(i/hbar)[m v dx - m v^2 dtau / 2] - eps v^2}`` is
    sampled at a step resolving its fastest local oscillation on the window
    where the damping exceeds ``exp(-40)``, then scaled by ``m / (2 pi hbar)``.
    """
    if params is None:
        raise TypeError("params is required")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if not dtau > 0:
        raise ValueError(f"dtau must be positive, got {dtau}")
    m, hbar = params.m, params.hbar
    dx = float(dx)
    vmax = math.sqrt(40.0 / eps)
    omega = m / hbar * (dtau * vmax + abs(dx))
    step = min(math.pi / (4 * omega), vmax / 64)
    n = 2 * int(math.ceil(vmax / step)) + 1
    v = np.linspace(-vmax, vmax, n)
    f = np.exp(-eps * v**2 + 1j * m / hbar * (v * dx - 0.5 * v**2 * dtau))
    integral = np.trapezoid(f, v) if hasattr(np, "trapezoid") else np.trapz(f, v)
    return m / (2 * math.pi * hbar) * integral


def covariance_phase(dx, v, dtau, params):
    """Multiplicator phase linking boosted and unboosted free kernels."""
    return params.m / params.hbar * (v * dx + 0.5 * v**2 * dtau)


def short_time_kernel(x1, x0, t, a_t, g, model, params, dtau):
    """One slice of the decohering propagator after the momentum integral.

    ``free_kernel(x1 - x0) * exp[i V dtau + i A_gauge (x1 - x0)]
    * exp[-kappa (A - a_t)^2 dtau - (i/hbar)(eta a_t B + C) dtau]``, all
    fields and observables taken at the midpoint ``(x0 + x1) / 2``.
    Arrays broadcast.
    """
    for obs in model.observables:
        if obs.basis != POSITION:
            raise UnsupportedModelError(
                f"momentum-basis observable {obs.label!r} has no short-time position kernel")
    x1 = np.asarray(x1, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    dx = x1 - x0
    xbar = 0.5 * (x0 + x1)
    expo = 1j * (g.potential(xbar, t) * dtau + g.gauge(xbar, t) * dx)
    if model.kappa:
        expo = expo - model.kappa * (model.A(xbar) - a_t) ** 2 * dtau
    if model.B is not None and model.eta:
        expo = expo - 1j / params.hbar * model.eta * a_t * model.B(xbar) * dtau
    if model.C is not None:
        expo = expo - 1j / params.hbar * model.C(xbar) * dtau
    return free_kernel(dx, dtau, params) * np.exp(expo)
