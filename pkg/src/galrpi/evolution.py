"""
Time-sliced propagation on a periodic grid.

One slice applies the decohering short-time kernel through a symmetric
(Strang) split: half a kinetic step in momentum space, the full
position-space factor, the momentum-basis factor, then the second kinetic
half. A gauge field enters through its line integral ``chi(x, t)``, which
sandwiches the slice as ``exp(i chi) ... exp(-i chi)``; this reproduces the
midpoint rule ``A(xbar)(x1 - x0)`` of the kernel.

Fields depending on time are evaluated at the middle of each slice.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import PhysicsParams
from .errors import CostGuardError, GridMismatchError, NumericalFailure, UnsupportedModelError
from .models import MOMENTUM, POSITION, GaugeModel, MeasurementModel, _zero
from .paths import Corridor
from .states import DensityMatrix, GaussianPacket, Grid, WaveFunction

log = logging.getLogger(__name__)

EDGE_POINTS = 5
EDGE_MASS_WARN = 1e-6
MAX_MATRIX_N = 1024
MC_BLOCK = 256


@dataclass(frozen=True)
class Scenario:
    grid: Grid
    params: PhysicsParams = field(default_factory=PhysicsParams)
    gauge: GaugeModel = field(default_factory=GaugeModel)
    model: MeasurementModel = field(default_factory=MeasurementModel)
    dt: float = 0.01
    n_steps: int = 0
    psi0: GaussianPacket = field(default_factory=GaussianPacket)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise ValueError(f"n_steps must be a non-negative integer, got {self.n_steps}")

    @property
    def total_time(self):
        return self.dt * self.n_steps

    def initial_state(self):
        return self.psi0.on(self.grid, self.params.hbar)

    def with_(self, **changes):
        from dataclasses import replace
        return replace(self, **changes)

    def V_phys(self, t):
        return self.gauge.V_phys(self.grid.x, t, self.params.hbar)


def _has_gauge(gauge):
    return gauge.A_gauge is not _zero


def gauge_integral(grid, gauge, t):
    """``chi(x) = int_{x_c}^x A_gauge(y, t) dy`` on the grid, ``x_c`` the grid midpoint.

    Cumulative trapezoid rule: exact for constant and linear fields.
    """
    x = grid.x
    a = gauge.gauge(x, t)
    chi = np.concatenate(([0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * grid.h)))
    return chi - chi[grid.n // 2]


class _Stepper:
    """Precomputed factors of one slice for a scenario; works on stacked amplitudes."""

    def __init__(self, s):
        self.s = s
        g, p, m = s.grid, s.params, s.model
        self.x = g.x
        self.pk = p.hbar * g.k
        self.kin_half = np.exp(-1j * self.pk**2 * s.dt / (4 * p.m * p.hbar))
        self.gauge = _has_gauge(s.gauge)
        self.pos = [o for o in m.observables if o.basis == POSITION]
        self.mom = [o for o in m.observables if o.basis == MOMENTUM]
        self._static = s.gauge.static
        self._cache = {}

    def _fields(self, t):
        key = None if self._static else t
        if key in self._cache:
            return self._cache[key]
        s = self.s
        vphys = s.gauge.V_phys(self.x, t, s.params.hbar)
        chi = gauge_integral(s.grid, s.gauge, t) if self.gauge else None
        out = (vphys, chi)
        if self._static:
            self._cache[key] = out
        return out

    def _exponent(self, q, basis, a):
        # -(i/hbar)(eta a B + C) dt - kappa (A - a)^2 dt, restricted to one basis
        s, m = self.s, self.s.model
        expo = 0.0
        if m.kappa and m.A.basis == basis:
            expo = expo - m.kappa * (m.A(q) - a) ** 2 * s.dt
        if m.B is not None and m.B.basis == basis and m.eta:
            expo = expo - 1j / s.params.hbar * m.eta * a * m.B(q) * s.dt
        if m.C is not None and m.C.basis == basis:
            expo = expo - 1j / s.params.hbar * m.C(q) * s.dt
        return expo

    def step(self, amp, t, a):
        """Advance stacked amplitudes ``amp[..., n]`` over the slice starting at ``t``."""
        s = self.s
        tm = t + 0.5 * s.dt
        vphys, chi = self._fields(tm)
        a = np.asarray(a, dtype=float)
        if a.ndim:
            a = a[..., None]
        if chi is not None:
            amp = amp * np.exp(-1j * chi)
        phi = np.fft.fft(amp, axis=-1) * self.kin_half
        amp = np.fft.ifft(phi, axis=-1)
        expo = -1j / s.params.hbar * vphys * s.dt + self._exponent(self.x, POSITION, a)
        amp = amp * np.exp(expo)
        phi = np.fft.fft(amp, axis=-1)
        if self.mom:
            phi = phi * np.exp(self._exponent(self.pk, MOMENTUM, a))
        amp = np.fft.ifft(phi * self.kin_half, axis=-1)
        if chi is not None:
            amp = amp * np.exp(1j * chi)
        return amp

    def unitary_density_step(self, rho, t, decay):
        """``U rho U^dagger`` with ``decay`` multiplied elementwise at the split midpoint."""
        s = self.s
        vphys, chi = self._fields(t + 0.5 * s.dt)
        if chi is not None:
            g = np.exp(-1j * chi)
            rho = g[:, None] * rho * g.conj()[None, :]
        rho = _kinetic_both(rho, self.kin_half)
        u = np.exp(-1j / s.params.hbar * vphys * s.dt)
        rho = u[:, None] * rho * u.conj()[None, :] * decay
        rho = _kinetic_both(rho, self.kin_half)
        if chi is not None:
            g = np.exp(1j * chi)
            rho = g[:, None] * rho * g.conj()[None, :]
        return 0.5 * (rho + rho.conj().T)


def _kinetic_both(rho, phase):
    x = np.fft.ifft(np.fft.fft(rho, axis=0) * phase[:, None], axis=0)
    return np.fft.fft(np.fft.ifft(x, axis=1) * phase.conj()[None, :], axis=1)


def propagate_step(psi, t, a_t, s, step_index=None):
    """One Strang slice of the decohering propagator starting at time ``t``.

    The result is not renormalized: its norm falls when ``kappa > 0``.
    """
    if psi.grid != s.grid:
        raise GridMismatchError("wave function lives on a different grid")
    if not math.isfinite(a_t):
        raise ValueError(f"corridor sample must be finite, got {a_t}")
    amp = _Stepper(s).step(psi.amp, t, a_t)
    if not np.isfinite(amp).all():
        raise NumericalFailure("non-finite amplitudes", step_index)
    return WaveFunction(s.grid, amp)


def propagate_corridor(psi0, c, s, t0=0.0, on_step=None):
    """Conditional amplitude after folding the slices of corridor ``c`` left to right.

    ``on_step(k, t, psi)`` is called after every slice when given.
    """
    if len(c) != s.n_steps:
        raise GridMismatchError(f"corridor has {len(c)} samples, scenario needs {s.n_steps}")
    if c.dt != s.dt:
        raise GridMismatchError(f"corridor slice width {c.dt} differs from scenario dt {s.dt}")
    if psi0.grid != s.grid:
        raise GridMismatchError("wave function lives on a different grid")
    stepper = _Stepper(s)
    amp = psi0.amp
    warned = False
    for k, a in enumerate(c.a):
        t = t0 + k * s.dt
        amp = stepper.step(amp, t, a)
        if not np.isfinite(amp).all():
            raise NumericalFailure("non-finite amplitudes", k)
        if not warned:
            warned = _warn_edges(amp, k)
        if on_step is not None:
            on_step(k, t + s.dt, WaveFunction(s.grid, amp))
    return WaveFunction(s.grid, amp)


def _warn_edges(amp, k):
    w = np.abs(amp) ** 2
    total = w.sum()
    edge = w[:EDGE_POINTS].sum() + w[-EDGE_POINTS:].sum()
    if total and edge > EDGE_MASS_WARN * total:
        log.warning("probability %.3g within %d points of the grid edge at step %d; "
                    "periodic wrap-around may matter", edge / total, EDGE_POINTS, k)
        return True
    return False


def propagator_matrix(s, c, t0=0.0):
    """Grid kernel ``M[i, j]`` of the corridor propagator.

    Column ``j`` is the evolved discrete delta ``e_j / h``. Applying the
    propagator to ``psi`` is ``h * M @ psi``, so ``M(c1 c2) = h M(c2) M(c1)``.
    """
    n = s.grid.n
    if n > MAX_MATRIX_N:
        raise CostGuardError(f"propagator matrix limited to n <= {MAX_MATRIX_N}, got {n}")
    if len(c) != s.n_steps:
        raise GridMismatchError(f"corridor has {len(c)} samples, scenario needs {s.n_steps}")
    stepper = _Stepper(s)
    amp = np.eye(n, dtype=complex) / s.grid.h
    for k, a in enumerate(c.a):
        amp = stepper.step(amp, t0 + k * s.dt, a)
        if not np.isfinite(amp).all():
            raise NumericalFailure("non-finite amplitudes", k)
    return amp.T.copy()


def effective_generator(s, t, a_t):
    """Dense generator ``H_eff`` with spectral kinetic term, for brute-force checks.

    ``psi(t + dt) = expm(-i H_eff dt / hbar) psi(t)`` for fields frozen over the step.
    """
    if _has_gauge(s.gauge):
        raise UnsupportedModelError("dense generator does not include gauge fields")
    n, p = s.grid.n, s.params
    F = np.fft.fft(np.eye(n), axis=0)
    Finv = np.fft.ifft(np.eye(n), axis=0)
    pk = p.hbar * s.grid.k
    x = s.grid.x

    def diag(q, basis):
        return 1j * p.hbar / s.dt * np.asarray(_Stepper(s)._exponent(q, basis, a_t)) * np.ones_like(q)

    H = Finv @ np.diag(pk**2 / (2 * p.m) + diag(pk, MOMENTUM)) @ F
    return H + np.diag(s.V_phys(t) + diag(x, POSITION))


def _check_exact_model(model):
    if model.A.basis != POSITION:
        raise UnsupportedModelError("exact ensemble mode needs a position-basis A")
    if model.has_dissipation:
        raise UnsupportedModelError("exact ensemble mode excludes B and C terms; use Monte Carlo mode")


def accumulate_density_exact(rho0, s, t0=0.0, on_step=None):
    """Corridor-averaged density matrix with the readouts integrated out slice by slice.

    Each slice integrates ``sqrt(2 kappa dt / pi) exp[-kappa dt ((A(x)-a)^2 + (A(x')-a)^2)]``
    over ``a``, which leaves ``exp[-(kappa dt / 2)(A(x) - A(x'))^2]`` on ``rho(x, x')``.
    """
    _check_exact_model(s.model)
    if rho0.grid != s.grid:
        raise GridMismatchError("density matrix lives on a different grid")
    stepper = _Stepper(s)
    A = s.model.A(s.grid.x)
    decay = np.exp(-0.5 * s.model.kappa * s.dt * (A[:, None] - A[None, :]) ** 2)
    rho = rho0.rho
    for k in range(s.n_steps):
        rho = stepper.unitary_density_step(rho, t0 + k * s.dt, decay)
        if not np.isfinite(rho).all():
            raise NumericalFailure("non-finite density matrix", k)
        if on_step is not None:
            on_step(k, t0 + (k + 1) * s.dt, rho)
    return DensityMatrix(s.grid, rho)


def sample_stream(seed, index):
    """Independent counter-based generator for sample ``index`` of run ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _mean_observable(amp, obs, s):
    if obs.basis == POSITION:
        w = np.abs(amp) ** 2
        q = s.grid.x
    else:
        w = np.abs(np.fft.fft(amp, axis=-1)) ** 2
        q = s.params.hbar * s.grid.k
    return (w * obs(q)).sum(axis=-1) / w.sum(axis=-1)


def _run_samples(psi0, s, seed, indices, t0=0.0):
    """Normalized final amplitudes, log weights and corridors for a batch of samples."""
    m = s.model
    sigma = 1.0 / math.sqrt(4 * m.kappa * s.dt)
    z = np.array([sample_stream(seed, i).standard_normal(s.n_steps) for i in indices])
    z = z.reshape(len(indices), s.n_steps)
    stepper = _Stepper(s)
    amp = np.repeat(psi0.amp[None, :], len(indices), axis=0)
    h = s.grid.h
    log_w = np.full(len(indices), math.log(h * np.sum(np.abs(psi0.amp) ** 2)))
    amp = amp / np.sqrt(np.exp(log_w))[:, None]
    corridors = np.empty((len(indices), s.n_steps))
    for k in range(s.n_steps):
        mu = _mean_observable(amp, m.A, s)
        a = mu + sigma * z[:, k]
        corridors[:, k] = a
        # sqrt(2 kappa dt / pi) / q(a) with q the N(mu, sigma^2) density
        log_w += 0.5 * z[:, k] ** 2
        amp = stepper.step(amp, t0 + k * s.dt, a)
        if not np.isfinite(amp).all():
            raise NumericalFailure("non-finite amplitudes", k)
        n2 = h * np.sum(np.abs(amp) ** 2, axis=-1)
        log_w += np.log(n2)
        amp = amp / np.sqrt(n2)[:, None]
    return amp, log_w, corridors


def _block_sum(psi0, s, seed, indices):
    amp, log_w, _ = _run_samples(psi0, s, seed, indices)
    w = np.exp(log_w)
    return np.einsum("s,si,sj->ij", w, amp, amp.conj(), optimize=False)


def _blocks(n_samples, block):
    return [range(b, min(b + block, n_samples)) for b in range(0, n_samples, block)]


def mc_partial_sums(psi0, s, n_samples, seed, threads=1, block=MC_BLOCK):
    """Per-block sums of weighted projectors, in block order.

    Blocks have a fixed size, so the sequence of sums does not depend on
    ``threads``.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if not s.model.kappa > 0:
        raise UnsupportedModelError("Monte Carlo corridors need kappa > 0 (proposal variance "
                                    "1/(4 kappa dt) is infinite); use exact mode")
    if psi0.grid != s.grid:
        raise GridMismatchError("wave function lives on a different grid")
    blocks = _blocks(n_samples, block)
    if threads <= 1:
        return [_block_sum(psi0, s, seed, b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: _block_sum(psi0, s, seed, b), blocks))


def accumulate_density_mc(psi0, s, n_samples, seed, threads=1, block=MC_BLOCK):
    """Importance-sampled corridor average of ``|psi_[a]><psi_[a]|``.

    Readouts are drawn slice by slice from ``N(<A>, 1/(4 kappa dt))``
    centred on the current normalized state. Each sample is weighted by
    ``prod_k sqrt(2 kappa dt / pi) / q_k(a_k)``, so the mean is an unbiased
    estimate of :func:`accumulate_density_exact`. Output is bit-identical
    for a given ``seed`` whatever the thread count.
    """
    total = None
    for part in mc_partial_sums(psi0, s, n_samples, seed, threads, block):
        total = part if total is None else total + part
    rho = total / n_samples
    return DensityMatrix(s.grid, 0.5 * (rho + rho.conj().T))


def mc_convergence(psi0, s, n_samples, seed, reference, threads=1, block=MC_BLOCK):
    """Trace distance to ``reference`` after each completed block of samples.

    Returns ``(rows, final)`` where rows are ``(samples, trace_distance, trace)``.
    """
    rows = []
    total = None
    done = 0
    for part in mc_partial_sums(psi0, s, n_samples, seed, threads, block):
        total = part if total is None else total + part
        done += min(block, n_samples - done)
        rho = total / done
        est = DensityMatrix(s.grid, 0.5 * (rho + rho.conj().T))
        rows.append((done, est.trace_distance(reference), est.trace))
    return rows, est


def sample_corridor(psi0, s, seed, index=0):
    """One readout record drawn with the Monte Carlo proposal, and its log weight."""
    if not s.model.kappa > 0:
        raise UnsupportedModelError("sampling a corridor needs kappa > 0")
    _, log_w, corridors = _run_samples(psi0, s, seed, [index])
    return Corridor(s.dt, corridors[0]), float(log_w[0])
