import math

import numpy as np
import pytest

from galrpi.algebra import PhysicsParams
from galrpi.checks import kernel_reference
from galrpi.errors import StepSizeError, UnsupportedModelError
from galrpi.models import MeasurementModel, ObservableSpec
from galrpi.oracles import (
    EffectiveHamiltonian,
    cn_step,
    forced_kernel,
    free_gaussian,
    gaussian_wave,
    lindblad_step,
)
from galrpi.states import DensityMatrix, GaussianPacket, Grid, WaveFunction

P = PhysicsParams()
X = ObservableSpec.position(lambda x: x, "x")


def packet_state(grid, center=0.0, width=1.0, momentum=0.0):
    return GaussianPacket(center, width, momentum).on(grid).normalized()


def test_free_gaussian_examples():
    assert free_gaussian(0.0, 0.3, 1.2, 0.5, P) == (0.3, 1.2, 1.0)
    _, w, _ = free_gaussian(2.0, 0.0, 1.0, 0.0, P)
    assert w**2 == pytest.approx(2.0, rel=1e-15)
    c1, _, _ = free_gaussian(1.0, 0.2, 1.0, 0.7, P)
    c2, _, _ = free_gaussian(2.0, 0.2, 1.0, 0.7, P)
    assert c2 - c1 == pytest.approx(c1 - 0.2)


def test_gaussian_wave_matches_kernel_quadrature():
    grid = Grid(-20, 20, 512)
    pk = GaussianPacket(-1.0, 1.0, 0.5)
    for force in (0.0, 2.0):
        ref = kernel_reference(grid, 1.0, pk, P, force)
        exact = gaussian_wave(grid.x, 1.0, pk.center, pk.width, pk.momentum, P, force)
        assert np.abs(ref - exact).max() < 1e-9


def test_forced_kernel_reduces_to_free():
    from galrpi.kernels import free_kernel
    x, y = np.linspace(-2, 2, 9), 0.3
    assert np.allclose(forced_kernel(x, y, 0.8, 0.0, P), free_kernel(x - y, 0.8, P), rtol=1e-15)


@pytest.mark.parametrize("order", [2, 4])
def test_banded_step_matches_dense_solve(order):
    grid = Grid(-6, 6, 64)
    model = MeasurementModel(X, 0.2, C=ObservableSpec.position(np.sin))
    H = EffectiveHamiltonian.build(grid, P, 0.5 * grid.x**2, model, 0.3, order)
    psi = packet_state(grid, 0.5, 0.8, 0.3)
    dt = 0.01
    D = H.dense()
    if order == 4:
        # M^-1 K is symmetrized in dense(); compare to the unsymmetrized pencil directly
        n = grid.n
        idx = np.arange(n - 1)
        M = np.diag(np.full(n, 10 / 12))
        M[idx, idx + 1] = M[idx + 1, idx] = 1 / 12
        K = np.diag(np.full(n, H.kin_diag))
        K[idx, idx + 1] = K[idx + 1, idx] = H.off
        D = np.linalg.solve(M, K) + np.diag(H.diag)
    A = np.eye(grid.n) + 0.5j * dt * D
    B = np.eye(grid.n) - 0.5j * dt * D
    dense = np.linalg.solve(A, B @ psi.amp)
    assert np.abs(cn_step(psi, H, dt).amp - dense).max() < 1e-12


def test_cn_unitary_for_real_potential():
    grid = Grid(-10, 10, 256)
    H = EffectiveHamiltonian.build(grid, P, 0.5 * grid.x**2)
    psi = packet_state(grid, 1.0)
    for _ in range(20):
        nxt = cn_step(psi, H, 0.01)
        assert nxt.norm == pytest.approx(psi.norm, abs=1e-12)
        psi = nxt


def test_cn_free_packet_spread():
    grid = Grid(-20, 20, 1024)
    H = EffectiveHamiltonian.build(grid, P, np.zeros(grid.n))
    psi = packet_state(grid)
    for _ in range(200):
        psi = cn_step(psi, H, 0.005)
    _, width, _ = free_gaussian(1.0, 0.0, 1.0, 0.0, P)
    assert psi.moments(P)["x2"] == pytest.approx(width**2, rel=1e-4)


def test_cn_initial_norm_decay_rate():
    grid = Grid(-10, 10, 256)
    kappa, a = 0.4, 0.2
    psi = packet_state(grid, 0.5, 0.8)
    rate = 2 * kappa * psi.expect_position(lambda x: (x - a) ** 2)
    errs = []
    for dt in (0.004, 0.002):
        H = EffectiveHamiltonian.build(grid, P, np.zeros(grid.n), MeasurementModel(X, kappa), a)
        measured = (1 - cn_step(psi, H, dt).norm2) / dt
        errs.append(abs(measured - rate))
    assert errs[0] < 5e-2 * rate
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.2)


def test_anti_hermitian_part_negative():
    grid = Grid(-5, 5, 32)
    H = EffectiveHamiltonian.build(grid, P, grid.x**2, MeasurementModel(X, 0.5), 0.3).dense()
    anti = (H - H.conj().T) / 2j
    assert np.linalg.eigvalsh(anti).max() <= 1e-12


def test_fourth_order_kinetic_is_more_accurate():
    grid = Grid(-10, 10, 128)
    psi = packet_state(grid, 0.0, 1.0, 0.5)
    exact = -0.5 * np.fft.ifft(-(grid.k**2) * np.fft.fft(psi.amp))
    errs = {}
    for order in (2, 4):
        T = EffectiveHamiltonian.build(grid, P, np.zeros(grid.n), order=order).kinetic()
        errs[order] = np.abs(T @ psi.amp - exact).max()
    assert errs[4] < errs[2] / 10


def test_oracle_rejects_momentum_observables():
    grid = Grid(-5, 5, 32)
    pobs = ObservableSpec.momentum(lambda p: p, "p")
    with pytest.raises(UnsupportedModelError):
        EffectiveHamiltonian.build(grid, P, np.zeros(32), MeasurementModel(pobs, 1.0))
    with pytest.raises(UnsupportedModelError):
        lindblad_step(DensityMatrix.pure(packet_state(grid)), np.eye(32), pobs, 1.0, 0.01)


def test_cn_rejects_bad_dt():
    grid = Grid(-5, 5, 32)
    H = EffectiveHamiltonian.build(grid, P, np.zeros(32))
    with pytest.raises(ValueError):
        cn_step(packet_state(grid), H, 0.0)


def _hermitian_h(grid):
    return EffectiveHamiltonian.build(grid, P, 0.5 * grid.x**2).hermitian_part()


def test_lindblad_stationary_without_kappa():
    grid = Grid(-6, 6, 32)
    H = _hermitian_h(grid)
    _, vecs = np.linalg.eigh(H)
    ground = WaveFunction(grid, vecs[:, 0] / math.sqrt(grid.h))
    rho = rho0 = DensityMatrix.pure(ground)
    for _ in range(10):
        rho = lindblad_step(rho, H, X, 0.0, 0.001)
    assert np.abs(rho.rho - rho0.rho).max() < 1e-12


def test_lindblad_trace_and_purity():
    grid = Grid(-6, 6, 32)
    H = _hermitian_h(grid)
    rho = DensityMatrix.pure(packet_state(grid, 1.0, 0.7))
    tr0, pur = rho.trace, rho.purity
    for _ in range(100):
        rho = lindblad_step(rho, H, X, 0.2, 0.002)
        assert rho.trace == pytest.approx(tr0, abs=1e-10)
        assert rho.purity < pur
        pur = rho.purity


def test_lindblad_step_size_guard():
    grid = Grid(-6, 6, 64)
    H = _hermitian_h(grid)
    with pytest.raises(StepSizeError):
        lindblad_step(DensityMatrix.pure(packet_state(grid)), H, X, 0.1, 0.5)
