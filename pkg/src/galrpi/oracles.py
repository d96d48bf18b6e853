"""
Reference solvers for cross-checking the split-step engine.

They discretize differently on purpose: a tridiagonal finite-difference
kinetic term with Dirichlet walls instead of the spectral periodic one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import NumericalFailure, StepSizeError, UnsupportedModelError
from .models import POSITION
from .states import DensityMatrix, WaveFunction


def _tri_matvec(main, off, v):
    out = main * v
    out[:-1] += off * v[1:]
    out[1:] += off * v[:-1]
    return out


@dataclass(frozen=True, eq=False)
class EffectiveHamiltonian:
    """Finite-difference kinetic term plus complex diagonal.

    ``diag = V_phys + eta a B + C - i hbar kappa (A - a)^2``

    The kinetic term is ``M^-1 K`` with ``K`` the three-point
    ``-hbar^2/2m d^2/dx^2`` and ``M`` the identity (``order=2``) or the
    compact fourth-order mass matrix ``tridiag(1, 10, 1) / 12``
    (``order=4``, default). Both are tridiagonal, so Crank-Nicolson stays a
    banded solve. Walls are Dirichlet.
    """

    grid: object
    params: object
    diag: np.ndarray
    order: int = 4

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError(f"order must be 2 or 4, got {self.order}")

    @property
    def off(self):
        p, h = self.params, self.grid.h
        return -p.hbar**2 / (2 * p.m * h**2)

    @property
    def kin_diag(self):
        p, h = self.params, self.grid.h
        return p.hbar**2 / (p.m * h**2)

    @property
    def mass(self):
        """``(main, off)`` of the mass matrix ``M``."""
        return (1.0, 0.0) if self.order == 2 else (10 / 12, 1 / 12)

    @classmethod
    def build(cls, grid, params, V_phys, model=None, a_t=0.0, order=4):
        x = grid.x
        diag = np.asarray(V_phys, dtype=complex) * np.ones(grid.n)
        if model is not None:
            for obs in model.observables:
                if obs.basis != POSITION:
                    raise UnsupportedModelError("finite-difference oracle needs position-basis observables")
            if model.B is not None and model.eta:
                diag = diag + model.eta * a_t * model.B(x)
            if model.C is not None:
                diag = diag + model.C(x)
            if model.kappa:
                diag = diag - 1j * params.hbar * model.kappa * (model.A(x) - a_t) ** 2
        return cls(grid, params, diag, order)

    def kinetic(self):
        """Dense real-symmetric kinetic matrix ``M^-1 K``."""
        n = self.grid.n
        idx = np.arange(n - 1)
        K = np.diag(np.full(n, self.kin_diag))
        K[idx, idx + 1] = K[idx + 1, idx] = self.off
        if self.order == 2:
            return K
        main, off = self.mass
        M = np.diag(np.full(n, main))
        M[idx, idx + 1] = M[idx + 1, idx] = off
        T = np.linalg.solve(M, K)
        return 0.5 * (T + T.T)

    def hermitian_part(self):
        return self.kinetic() + np.diag(self.diag.real)

    def dense(self):
        return self.kinetic() + np.diag(self.diag)


def cn_step(psi, H, dt):
    """Crank-Nicolson step ``(1 + i dt H / 2 hbar) psi' = (1 - i dt H / 2 hbar) psi``.

    Solved as ``(M + c(K + M D)) psi' = (M - c(K + M D)) psi`` with
    ``c = i dt / 2 hbar``, a tridiagonal system.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    c = 0.5j * dt / H.params.hbar
    mm, mo = H.mass
    v = psi.amp
    rhs = (_tri_matvec(mm, mo, v) - c * _tri_matvec(H.kin_diag, H.off, v)
           - c * _tri_matvec(mm, mo, H.diag * v))
    n = psi.grid.n
    d = H.diag
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = mo * (1 + c * d[1:]) + c * H.off
    ab[1, :] = mm * (1 + c * d) + c * H.kin_diag
    ab[2, :-1] = mo * (1 + c * d[:-1]) + c * H.off
    try:
        out = solve_banded((1, 1), ab, rhs)
    except (LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"singular Crank-Nicolson system: {exc}") from exc
    if not np.isfinite(out).all():
        raise NumericalFailure("non-finite Crank-Nicolson solution")
    return WaveFunction(psi.grid, out)


def _lindblad_rhs(rho, H, a, kappa, hbar):
    comm = H @ rho - rho @ H
    return -1j / hbar * comm - 0.5 * kappa * (a[:, None] - a[None, :]) ** 2 * rho


def lindblad_step(rho, H, L, kappa, dt, hbar=1.0):
    """RK4 step of ``d rho/dt = -(i/hbar)[H, rho] + kappa (A rho A - {A^2, rho}/2)``.

    ``H`` is a dense Hermitian matrix or an :class:`EffectiveHamiltonian`
    (its Hermitian part is used). ``L`` is the position-basis observable
    ``A``; the Lindblad operator is ``sqrt(kappa) A``.
    """
    if L.basis != POSITION:
        raise UnsupportedModelError("dense Lindblad oracle needs a position-basis observable")
    if isinstance(H, EffectiveHamiltonian):
        H = H.hermitian_part()
    a = L(rho.grid.x)
    # Gershgorin bound on the generator; RK4 is stable up to ~2.78
    radius = 2 * np.abs(H).sum(axis=1).max() / hbar + 0.5 * kappa * float(np.ptp(a)) ** 2
    if dt * radius > 2.5:
        raise StepSizeError(f"dt={dt} too large for RK4 (spectral bound {radius:.3g})")
    r = rho.rho
    k1 = _lindblad_rhs(r, H, a, kappa, hbar)
    k2 = _lindblad_rhs(r + 0.5 * dt * k1, H, a, kappa, hbar)
    k3 = _lindblad_rhs(r + 0.5 * dt * k2, H, a, kappa, hbar)
    k4 = _lindblad_rhs(r + dt * k3, H, a, kappa, hbar)
    out = r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    out = 0.5 * (out + out.conj().T)
    new = DensityMatrix(rho.grid, out)
    if not np.isfinite(out).all() or abs(new.trace - rho.trace) > 1e-6:
        raise StepSizeError(f"trace drifted from {rho.trace} to {new.trace}")
    return new


def free_gaussian(t, center0, width0, momentum0, params):
    """Centre, position spread and norm of a free Gaussian packet at time ``t``."""
    if not width0 > 0:
        raise ValueError(f"width0 must be positive, got {width0}")
    center = center0 + momentum0 / params.m * t
    width = width0 * math.sqrt(1 + (params.hbar * t / (2 * params.m * width0**2)) ** 2)
    return center, width, 1.0


def gaussian_wave(x, t, center0, width0, momentum0, params, force=0.0):
    """Exact Gaussian packet at time ``t`` for ``V_phys = -force * x``.

    The uniform-force solution is the free one displaced by ``force t^2 / 2m``
    and multiplied by ``exp[(i/hbar)(force t x - force^2 t^3 / 6m)]``.
    """
    m, hbar = params.m, params.hbar
    x = np.asarray(x, dtype=float)
    xi = x - force * t**2 / (2 * m)
    k0 = momentum0 / hbar
    alpha = width0**2 + 0.5j * hbar * t / m
    xc = center0 + hbar * k0 * t / m
    psi = ((2 * np.pi * width0**2) ** -0.25 * np.sqrt(width0**2 / alpha)
           * np.exp(1j * k0 * xi - 0.5j * hbar * k0**2 * t / m - (xi - xc) ** 2 / (4 * alpha)))
    return psi * np.exp(1j / hbar * (force * t * x - force**2 * t**3 / (6 * m)))


def forced_kernel(x, y, T, force, params):
    """Closed-form propagator for ``V_phys = -force * x`` over time ``T``."""
    m, hbar = params.m, params.hbar
    x = np.asarray(x)
    y = np.asarray(y)
    norm = math.sqrt(m / (2 * math.pi * hbar * T)) * np.exp(-0.25j * math.pi)
    phase = m * (x - y) ** 2 / (2 * T) + force * T * (x + y) / 2 - force**2 * T**3 / (24 * m)
    return norm * np.exp(1j * phase / hbar)
