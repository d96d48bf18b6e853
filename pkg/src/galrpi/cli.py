"""
Command-line driver.

    galrpi algebra-check [--trials N] [--seed S] [--config F] [--out DIR]
    galrpi free-propagator --config F [--seed S] [--out DIR]
    galrpi evolve --config F [--corridor SRC] [--oracle] [--seed S] [--out DIR]
    galrpi ensemble --config F [--samples N] [--threads T] [--oracle] [--seed S] [--out DIR]

Each command writes ``report.json`` plus its CSV tables into
``<out>/<command>/``. ``--out`` defaults to ``$GALRPI_OUT`` or
``./galrpi-out``. Exit status is 0 when every check passes, 1 when one
fails, 2 on usage, config or model errors and 3 on numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import checks
from .algebra import PhysicsParams
from .config import ConfigError, config_digest, load_config, read_corridor
from .errors import GridMismatchError, NumericalFailure, StepSizeError, UnsupportedModelError
from .evolution import (
    _has_gauge,
    accumulate_density_exact,
    mc_convergence,
    propagate_corridor,
    sample_corridor,
)
from .models import POSITION
from .oracles import EffectiveHamiltonian, cn_step, lindblad_step
from .paths import Corridor
from .report import OutputDir, RunReport
from .states import DensityMatrix, Grid

OUT_ENV = "GALRPI_OUT"
DEFAULT_OUT = "galrpi-out"

# acceptance thresholds
GROUP_TOL = 1e-10
COCYCLE_TOL = 1e-12
SLICED_TOL = 1e-3
SLOPE_TARGET, SLOPE_TOL = 2.0, 0.2
BOOST_TOL = 1e-3
CK_TOL = 1e-6
MATRIX_TOL = 1e-8
COVARIANCE_TOL = 1e-12
NORM_TOL = 1e-10
ORACLE_TOL = 1e-3
MC_TOL = 5e-2
LINDBLAD_TOL = 1e-3
TRACE_TOL = 1e-6


class UsageError(ValueError):
    pass


def _out_dir(args):
    root = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return os.path.join(root, args.command)


def cmd_algebra_check(n_trials, seed, params=None, out=None):
    """Group-law and cocycle trials; returns a :class:`RunReport`."""
    if n_trials < 1:
        raise UsageError(f"--trials must be >= 1, got {n_trials}")
    params = params or PhysicsParams()
    report = RunReport("algebra-check", config_digest({"m": params.m, "hbar": params.hbar}), seed)
    start = time.perf_counter()
    worst = checks.algebra_trials(n_trials, seed, params)
    report.info["n_trials"] = n_trials
    for name in ("associativity", "action", "inverse"):
        report.check(name, worst[name], GROUP_TOL)
    report.check("cocycle_rotation_free", worst["cocycle_rotation_free"], COCYCLE_TOL)
    report.check("cocycle_full", worst["cocycle_full"], COCYCLE_TOL)
    report.wall_time = time.perf_counter() - start
    if out is not None:
        OutputDir(out, report).write_report()
    return report


def _force(cfg):
    spec = cfg.potential
    if spec is None:
        return 0.0
    name = spec.name.replace(" ", "")
    if name.startswith("linear(") and cfg.gauge_field is None:
        return -spec.coef * float(name[len("linear("):-1])
    raise ConfigError("potential: free-propagator needs null or linear(c) (closed-form kernel)")


def cmd_free_propagator(cfg, seed=0, out=None):
    """Time slicing vs closed-form kernel, boost integral, convolution and covariance checks."""
    s = cfg.scenario
    sec = cfg.section("free_propagator")
    force = _force(cfg)
    T = float(sec.get("T", s.total_time or 1.0))
    slices = [int(n) for n in sec.get("slices", [16, 32, 64, 128])]
    if len(slices) < 2 or any(n < 1 for n in slices):
        raise ConfigError("free_propagator.slices: need at least two positive slice counts")
    eps = float(sec.get("eps", 1e-4))
    report = RunReport("free-propagator", cfg.digest, seed)
    start = time.perf_counter()

    rows = checks.time_sliced_errors(s, slices, T, force)
    finest = rows[int(np.argmax([r[0] for r in rows]))]
    report.check(f"sliced_error_{finest[0]}", finest[2], SLICED_TOL)
    report.info["force"] = force
    if force:
        # zero force is exact for the spectral split up to rounding: no slope to fit
        slope = checks.loglog_slope([r[1] for r in rows], [r[2] for r in rows])
        report.info["slope"] = slope
        report.check("convergence_slope", abs(slope - SLOPE_TARGET), SLOPE_TOL)

    dxs = [float(v) for v in sec.get("boost_dx", [0.0, 0.5, -1.25, 2.0])]
    report.check("boost_integral", checks.boost_integral_deviation(dxs, T, eps, s.params), BOOST_TOL)
    cases = checks.random_ck_cases(int(sec.get("ck_cases", 50)), seed)
    report.check("chapman_kolmogorov", checks.chapman_kolmogorov_residual(cases, s.params), CK_TOL)

    mn = int(sec.get("matrix_n", 128))
    ms = s.with_(grid=Grid(s.grid.x_min, s.grid.x_max, mn))
    rng = np.random.default_rng(seed)
    n1, n2 = (int(v) for v in sec.get("matrix_steps", [20, 30]))
    c1 = Corridor(ms.dt, rng.normal(0.0, 1.0, n1))
    c2 = Corridor(ms.dt, rng.normal(0.0, 1.0, n2))
    report.check("matrix_composition", checks.matrix_composition_residual(ms, c1, c2), MATRIX_TOL)
    report.check("covariance_phase",
                 checks.covariance_residual(int(sec.get("cov_trials", 1000)), seed, s.params), COVARIANCE_TOL)
    report.wall_time = time.perf_counter() - start
    if out is not None:
        out = OutputDir(out, report)
        out.csv("convergence.csv", ["slices", "dt", "rel_l2_error"], rows)
        out.write_report()
    return report


def _corridor(cfg, source, seed):
    s = cfg.scenario
    source = source or cfg.corridor
    if source == "zeros":
        return Corridor.zeros(s.dt, s.n_steps)
    if source == "sample":
        return sample_corridor(s.initial_state().normalized(), s, seed)[0]
    path = source[len("file:"):] if source.startswith("file:") else source
    try:
        c = read_corridor(path, s.dt)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    if len(c) != s.n_steps:
        raise GridMismatchError(f"{path}: corridor has {len(c)} samples, n_steps is {s.n_steps}")
    return c


def _oracle_supported(s):
    if _has_gauge(s.gauge):
        raise UnsupportedModelError("the finite-difference oracle does not include gauge fields")
    if any(o.basis != POSITION for o in s.model.observables):
        raise UnsupportedModelError("the finite-difference oracle needs position-basis observables")


def _moments_row(t, psi, s):
    m = psi.moments(s.params, s.V_phys(t))
    return [psi.norm, m["x"], m["p"], m["x2"], m["energy"]]


def cmd_evolve(cfg, corridor_source=None, oracle=False, seed=0, out=None):
    """Propagate along one corridor, optionally beside the Crank-Nicolson oracle."""
    s = cfg.scenario
    c = _corridor(cfg, corridor_source, seed)
    if oracle:
        _oracle_supported(s)
    report = RunReport("evolve", cfg.digest, seed)
    start = time.perf_counter()
    psi0 = s.initial_state().normalized()
    series = [[0.0] + _moments_row(0.0, psi0, s)]
    phi = psi0
    oracle_series = [_moments_row(0.0, psi0, s)] if oracle else None

    def on_step(k, t, psi):
        nonlocal phi
        series.append([t] + _moments_row(t, psi, s))
        if oracle:
            tm = t - 0.5 * s.dt
            H = EffectiveHamiltonian.build(s.grid, s.params, s.V_phys(tm), s.model, c.a[k], cfg.oracle_order)
            phi = cn_step(phi, H, s.dt)
            oracle_series.append(_moments_row(t, phi, s))

    psi = propagate_corridor(psi0, c, s, on_step=on_step)
    series = np.array(series)
    if s.model.kappa == 0:
        report.check("norm_conserved", np.abs(series[:, 1] - 1.0).max(), NORM_TOL)
    header = ["t", "norm", "x", "p", "x2", "energy"]
    if oracle:
        o = np.array(oracle_series)
        scale = np.sqrt(o[:, 3])
        report.check("oracle_norm", (np.abs(series[:, 1] - o[:, 0]) / o[:, 0]).max(), ORACLE_TOL)
        report.check("oracle_x", (np.abs(series[:, 2] - o[:, 1]) / scale).max(), ORACLE_TOL)
        report.check("oracle_x2", (np.abs(series[:, 4] - o[:, 3]) / o[:, 3]).max(), ORACLE_TOL)
        series = np.hstack([series, o])
        header += ["oracle_norm", "oracle_x", "oracle_p", "oracle_x2", "oracle_energy"]
    report.info.update(n_steps=s.n_steps, final_norm=float(psi.norm))
    report.wall_time = time.perf_counter() - start
    if out is not None:
        out = OutputDir(out, report)
        out.csv("timeseries.csv", header, series)
        snap = [s.grid.x, psi.amp.real, psi.amp.imag]
        snap_header = ["x", "re", "im"]
        if oracle:
            snap += [phi.amp.real, phi.amp.imag]
            snap_header += ["oracle_re", "oracle_im"]
        out.csv("snapshot.csv", snap_header, np.column_stack(snap))
        out.csv("corridor.csv", ["t", "a"], np.column_stack([s.dt * np.arange(len(c)), c.a]))
        out.write_report()
    return report


def lindblad_reference(rho0, s, order=4):
    """RK4 Lindblad evolution with the finite-difference Hamiltonian, ``L = sqrt(kappa) A``."""
    _oracle_supported(s)
    kin = EffectiveHamiltonian.build(s.grid, s.params, np.zeros(s.grid.n), order=order).kinetic()
    rho = rho0
    for k in range(s.n_steps):
        H = kin + np.diag(s.V_phys((k + 0.5) * s.dt))
        rho = lindblad_step(rho, H, s.model.A, s.model.kappa, s.dt, s.params.hbar)
    return rho


def cmd_ensemble(cfg, n_samples=None, seed=0, threads=None, oracle=False, out=None):
    """Exact and Monte Carlo corridor averages, optionally beside the Lindblad oracle."""
    s = cfg.scenario
    sec = cfg.section("ensemble")
    n_samples = int(n_samples if n_samples is not None else sec.get("samples", 10000))
    threads = int(threads if threads is not None else sec.get("threads", 1))
    if n_samples < 1:
        raise UsageError(f"--samples must be >= 1, got {n_samples}")
    if threads < 1:
        raise UsageError(f"--threads must be >= 1, got {threads}")
    if not s.model.kappa > 0:
        raise UnsupportedModelError("Monte Carlo ensemble needs model.kappa > 0")
    if oracle:
        _oracle_supported(s)
    report = RunReport("ensemble", cfg.digest, seed)
    start = time.perf_counter()
    psi0 = s.initial_state().normalized()
    rho0 = DensityMatrix.pure(psi0)
    exact = accumulate_density_exact(rho0, s)
    report.check("exact_trace", abs(exact.trace - rho0.trace), TRACE_TOL)
    rows, mc = mc_convergence(psi0, s, n_samples, seed, exact, threads)
    report.check("mc_vs_exact", rows[-1][1], MC_TOL)
    report.info.update(samples=n_samples, exact_purity=exact.purity, mc_trace=mc.trace)
    if oracle:
        lind = lindblad_reference(rho0, s, cfg.oracle_order)
        report.check("exact_vs_lindblad", exact.trace_distance(lind), LINDBLAD_TOL)
    report.wall_time = time.perf_counter() - start
    if out is not None:
        out = OutputDir(out, report)
        out.csv("mc_convergence.csv", ["samples", "trace_distance", "trace"], rows)
        mats = [("exact", exact), ("mc", mc)] + ([("lindblad", lind)] if oracle else [])
        for name, rho in mats:
            out.matrix(f"rho_{name}_re.csv", rho.rho.real)
            out.matrix(f"rho_{name}_im.csv", rho.rho.imag)
        out.write_report()
    return report


def build_parser():
    p = argparse.ArgumentParser(prog="galrpi", description=__doc__.split("\n\n")[0].strip())
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="scenario JSON")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./{DEFAULT_OUT})")

    a = sub.add_parser("algebra-check", help="random group-law and cocycle trials")
    common(a, config_required=False)
    a.add_argument("--trials", type=int, default=10000)

    common(sub.add_parser("free-propagator", help="free and uniform-force kernel consistency"))

    e = sub.add_parser("evolve", help="propagate along one corridor")
    common(e)
    e.add_argument("--corridor", help="'zeros', 'sample' or a CSV/JSON path (overrides config)")
    e.add_argument("--oracle", action="store_true", help="run the Crank-Nicolson oracle alongside")

    n = sub.add_parser("ensemble", help="exact and Monte Carlo corridor averages")
    common(n)
    n.add_argument("--samples", type=int)
    n.add_argument("--threads", type=int)
    n.add_argument("--oracle", action="store_true", help="compare with RK4 Lindblad evolution")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = _dispatch(args)
    except (UsageError, ConfigError, UnsupportedModelError, GridMismatchError) as exc:
        parser.exit(2, f"galrpi {args.command}: error: {exc}\n")
    except (NumericalFailure, StepSizeError) as exc:
        step = getattr(exc, "step", None)
        where = f" at step {step}" if step is not None else ""
        parser.exit(3, f"galrpi {args.command}: numerical failure{where}: {exc}\n")
    print(report.summary())
    return 0 if report.passed else 1


def _dispatch(args):
    out = _out_dir(args)
    if args.command == "algebra-check":
        params = load_config(args.config).scenario.params if args.config else None
        return cmd_algebra_check(args.trials, args.seed, params, out)
    cfg = load_config(args.config)
    if args.command == "free-propagator":
        return cmd_free_propagator(cfg, args.seed, out)
    if args.command == "evolve":
        return cmd_evolve(cfg, args.corridor, args.oracle, args.seed, out)
    return cmd_ensemble(cfg, args.samples, args.seed, args.threads, args.oracle, out)


if __name__ == "__main__":
    sys.exit(main())
