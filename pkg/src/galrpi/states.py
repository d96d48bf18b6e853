"""Uniform periodic 1-d grid, wave functions and density matrices on it."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid:
    """``n`` points ``x_min + j h`` with ``h = (x_max - x_min) / n``, periodic."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max must exceed x_min, got [{self.x_min}, {self.x_max}]")
        n = int(self.n)
        if n != self.n or n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")

    @property
    def h(self):
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self):
        return self.x_min + self.h * np.arange(self.n)

    @property
    def k(self):
        """Angular wavenumbers in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.h)

    @property
    def length(self):
        return self.x_max - self.x_min

    def to_json(self):
        return {"x_min": self.x_min, "x_max": self.x_max, "n": self.n}


@dataclass(frozen=True)
class GaussianPacket:
    """``(2 pi w^2)^(-1/4) exp[-(x - c)^2 / (4 w^2) + i p x / hbar]``; ``w`` is the position spread."""

    center: float = 0.0
    width: float = 1.0
    momentum: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"packet width must be positive, got {self.width}")

    def on_points(self, x, hbar=1.0):
        x = np.asarray(x, dtype=float)
        return (2 * np.pi * self.width**2) ** -0.25 * np.exp(
            -((x - self.center) ** 2) / (4 * self.width**2) + 1j * self.momentum * x / hbar)

    def on(self, grid, hbar=1.0):
        return WaveFunction(grid, self.on_points(grid.x, hbar))


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid
    amp: np.ndarray = field(repr=False)

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex)
        if amp.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} amplitudes, got shape {amp.shape}")
        object.__setattr__(self, "amp", amp)

    @property
    def norm2(self):
        return self.grid.h * float(np.sum(np.abs(self.amp) ** 2))

    @property
    def norm(self):
        return np.sqrt(self.norm2)

    def normalized(self):
        return WaveFunction(self.grid, self.amp / self.norm)

    def momentum_amplitudes(self):
        return np.fft.fft(self.amp)

    def expect_position(self, f):
        w = np.abs(self.amp) ** 2
        return float(np.sum(w * f(self.grid.x)) / np.sum(w))

    def expect_momentum(self, f, hbar=1.0):
        w = np.abs(self.momentum_amplitudes()) ** 2
        return float(np.sum(w * f(hbar * self.grid.k)) / np.sum(w))

    def moments(self, params, V_phys=None):
        """Normalized ``<x>, <p>, <x^2>`` and energy ``<p^2/2m + V_phys>``."""
        x = self.grid.x
        wx = np.abs(self.amp) ** 2
        sx = wx.sum()
        p = params.hbar * self.grid.k
        wp = np.abs(self.momentum_amplitudes()) ** 2
        sp = wp.sum()
        energy = float(np.sum(wp * p**2) / sp) / (2 * params.m)
        if V_phys is not None:
            energy += float(np.sum(wx * V_phys) / sx)
        return {
            "x": float(np.sum(wx * x) / sx),
            "p": float(np.sum(wp * p) / sp),
            "x2": float(np.sum(wx * x**2) / sx),
            "energy": energy,
        }

    def edge_mass(self, points=5):
        """Fraction of ``|psi|^2`` within ``points`` grid points of either edge."""
        w = np.abs(self.amp) ** 2
        total = w.sum()
        return float((w[:points].sum() + w[-points:].sum()) / total) if total else 0.0


def _herm_tol(rho):
    return 1e-10 * max(1.0, float(np.abs(rho).max()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Kernel ``rho(x_i, x_j)``; the operator trace is ``h * sum_i rho_ii``."""

    grid: Grid
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        n = self.grid.n
        if rho.shape != (n, n):
            raise ValueError(f"expected {n}x{n} matrix, got shape {rho.shape}")
        if np.abs(rho - rho.conj().T).max() > _herm_tol(rho):
            raise ValueError("density matrix is not Hermitian")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, psi):
        return cls(psi.grid, np.outer(psi.amp, psi.amp.conj()))

    @property
    def trace(self):
        return self.grid.h * float(np.real(np.trace(self.rho)))

    @property
    def operator(self):
        """Matrix of the operator on the grid (kernel times measure)."""
        return self.grid.h * self.rho

    @property
    def purity(self):
        op = self.operator
        return float(np.real(np.trace(op @ op))) / self.trace**2

    def trace_distance(self, other):
        """``0.5 * ||rho - sigma||_1`` of the grid operators."""
        diff = self.operator - other.operator
        diff = 0.5 * (diff + diff.conj().T)
        return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())

    def diagonal(self):
        return np.real(np.diag(self.rho)).copy()
