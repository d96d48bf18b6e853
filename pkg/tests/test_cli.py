import json
import os

import numpy as np
import pytest

from galrpi import cli
from galrpi.algebra import PhysicsParams
from galrpi.config import ConfigError, load_config, parse_config, read_corridor
from galrpi.report import RunReport, fmt
from galrpi.states import DensityMatrix, GaussianPacket, Grid, WaveFunction

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def base_config(**over):
    raw = {
        "grid": {"x_min": -10, "x_max": 10, "n": 128},
        "params": {"m": 1.0, "hbar": 1.0},
        "dt": 0.01,
        "n_steps": 20,
        "psi0": {"center": 0.5, "width": 0.8, "momentum": 0.0},
        "potential": "harmonic(1.0)",
        "model": {"A": "x", "kappa": 0.0},
    }
    raw.update(over)
    return raw


def write(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return str(p)


# -- config ------------------------------------------------------------------

def test_config_roundtrip_and_digest():
    cfg = parse_config(base_config())
    assert cfg.scenario.grid.n == 128
    assert cfg.scenario.V_phys(0.0)[0] == pytest.approx(0.5 * 100)
    assert cfg.digest == parse_config(base_config()).digest
    assert cfg.digest != parse_config(base_config(dt=0.02)).digest


@pytest.mark.parametrize("raw, field", [
    ({"grid": {"x_min": 0, "x_max": 1, "n": 100}}, "grid"),
    ({"dt": -1}, "dt"),
    ({"model": {"kappa": -0.1}}, "model.kappa"),
    ({"potential": "wobble"}, "potential"),
    ({"potential": "p^2"}, "potential"),
    ({"psi0": {"width": 0}}, "psi0.width"),
    ({"corridor": "nowhere"}, "corridor"),
    ({"oracle_order": 3}, "oracle_order"),
])
def test_config_errors_name_the_field(raw, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(base_config(**raw))


def test_missing_dt_reported():
    raw = base_config()
    del raw["dt"]
    with pytest.raises(ConfigError, match="dt: missing"):
        parse_config(raw)


def test_json_syntax_error_has_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "grid": {\n    "n": 12,\n  }\n}')
    with pytest.raises(ConfigError, match="line 4"):
        load_config(str(p))


def test_shipped_configs_parse():
    for name in os.listdir(CONFIGS):
        load_config(os.path.join(CONFIGS, name))


def test_read_corridor_csv_and_json(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("a\n0.5\n-1.0\n2\n")
    assert list(read_corridor(str(p), 0.1).a) == [0.5, -1.0, 2.0]
    q = tmp_path / "c.json"
    q.write_text(json.dumps({"dt": 0.1, "a": [1, 2]}))
    assert list(read_corridor(str(q), 0.1).a) == [1.0, 2.0]
    with pytest.raises(ConfigError):
        read_corridor(str(q), 0.2)
    p.write_text("0.5\nxyz\n")
    with pytest.raises(ConfigError, match="line 2"):
        read_corridor(str(p), 0.1)


# -- report ------------------------------------------------------------------

def test_report_checks_unique_and_digest_ignores_time():
    r = RunReport("x", "abc", 1)
    r.check("a", 1e-13, 1e-12)
    with pytest.raises(ValueError):
        r.check("a", 0.0, 1.0)
    d = r.digest
    r.wall_time = 99.0
    assert r.digest == d and r.passed
    r.check("b", 2.0, 1.0)
    assert not r.passed


def test_fmt_round_trips():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(fmt(v)) == v


# -- commands ----------------------------------------------------------------

def test_algebra_check_example(tmp_path):
    r = cli.cmd_algebra_check(1, 42, out=str(tmp_path))
    assert r.passed and max(c.residual for c in r.checks) < 1e-12
    assert [c.name for c in r.checks] == ["associativity", "action", "inverse",
                                          "cocycle_rotation_free", "cocycle_full"]
    assert cli.cmd_algebra_check(20, 7).digest == cli.cmd_algebra_check(20, 7).digest


def test_algebra_check_zero_trials_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["algebra-check", "--trials", "0", "--out", "/tmp/unused"])
    assert exc.value.code == 2
    assert "trials" in capsys.readouterr().err


def test_evolve_norm_conserved(tmp_path):
    cfg = parse_config(base_config())
    r = cli.cmd_evolve(cfg, out=str(tmp_path))
    assert [c.name for c in r.checks] == ["norm_conserved"] and r.passed
    ts = np.loadtxt(tmp_path / "timeseries.csv", delimiter=",", skiprows=1)
    assert ts.shape == (21, 6)
    assert np.abs(ts[:, 1] - 1).max() < 1e-10
    snap = np.loadtxt(tmp_path / "snapshot.csv", delimiter=",", skiprows=1)
    assert snap.shape == (128, 3)


def test_evolve_with_oracle(tmp_path):
    cfg = parse_config(base_config(model={"A": "x", "kappa": 0.1}, n_steps=50))
    r = cli.cmd_evolve(cfg, oracle=True, out=str(tmp_path))
    assert {c.name for c in r.checks} == {"oracle_norm", "oracle_x", "oracle_x2"}
    assert r.passed


def test_evolve_short_corridor_file(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("\n".join(["0.0"] * 5))
    cfg_path = write(tmp_path, base_config(corridor=f"file:{p}"))
    with pytest.raises(SystemExit) as exc:
        cli.main(["evolve", "--config", cfg_path, "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


def test_evolve_oracle_rejects_gauge_field(tmp_path):
    cfg_path = write(tmp_path, base_config(gauge_field="x"))
    with pytest.raises(SystemExit) as exc:
        cli.main(["evolve", "--config", cfg_path, "--oracle", "--out", str(tmp_path / "o")])
    assert exc.value.code == 2


def test_evolve_sampled_corridor_is_seeded(tmp_path):
    cfg = parse_config(base_config(model={"A": "x", "kappa": 0.2}))
    cli.cmd_evolve(cfg, "sample", seed=3, out=str(tmp_path / "a"))
    cli.cmd_evolve(cfg, "sample", seed=3, out=str(tmp_path / "b"))
    assert (tmp_path / "a" / "corridor.csv").read_bytes() == (tmp_path / "b" / "corridor.csv").read_bytes()


def test_ensemble_kappa_zero_is_mode_error(tmp_path):
    cfg_path = write(tmp_path, base_config())
    with pytest.raises(SystemExit) as exc:
        cli.main(["ensemble", "--config", cfg_path, "--samples", "10", "--out", str(tmp_path)])
    assert exc.value.code == 2


def ensemble_raw():
    return base_config(grid={"x_min": -6, "x_max": 6, "n": 32}, dt=1 / 32, n_steps=16,
                       model={"A": "x", "kappa": 0.1})


def test_ensemble_outputs_and_thread_invariance(tmp_path):
    cfg = parse_config(ensemble_raw())
    r1 = cli.cmd_ensemble(cfg, 300, seed=4, threads=1, oracle=True, out=str(tmp_path / "t1"))
    r2 = cli.cmd_ensemble(cfg, 300, seed=4, threads=2, oracle=True, out=str(tmp_path / "t2"))
    assert r1.passed
    assert {c.name for c in r1.checks} == {"exact_trace", "mc_vs_exact", "exact_vs_lindblad"}
    for name in ("rho_mc_re.csv", "rho_mc_im.csv", "mc_convergence.csv", "rho_exact_re.csv"):
        assert (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t2" / name).read_bytes()
    rho = np.loadtxt(tmp_path / "t1" / "rho_exact_re.csv", delimiter=",")
    assert rho.shape == (32, 32)


def test_free_propagator_default_config(tmp_path):
    cfg = load_config(os.path.join(CONFIGS, "free.json"))
    r = cli.cmd_free_propagator(cfg, out=str(tmp_path))
    assert r.passed, r.summary()
    assert abs(r.info["slope"] - 2.0) < 0.2
    rows = np.loadtxt(tmp_path / "convergence.csv", delimiter=",", skiprows=1)
    assert rows.shape == (4, 3)


def test_free_propagator_rejects_unsupported_potential():
    with pytest.raises(ConfigError):
        cli.cmd_free_propagator(parse_config(base_config()))


def test_main_exit_codes_and_byte_identical_outputs(tmp_path, capsys):
    cfg_path = write(tmp_path, base_config())
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["evolve", "--config", cfg_path, "--out", a]) == 0
    assert cli.main(["evolve", "--config", cfg_path, "--out", b]) == 0
    for name in ("timeseries.csv", "snapshot.csv", "corridor.csv"):
        assert (tmp_path / "a" / "evolve" / name).read_bytes() == (tmp_path / "b" / "evolve" / name).read_bytes()
    ra = json.loads((tmp_path / "a" / "evolve" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "evolve" / "report.json").read_text())
    assert ra["digest"] == rb["digest"]
    assert "PASS" in capsys.readouterr().out


def test_failing_check_gives_exit_one(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "NORM_TOL", 0.0)
    cfg_path = write(tmp_path, base_config())
    assert cli.main(["evolve", "--config", cfg_path, "--out", str(tmp_path)]) == 1


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    assert cli.main(["algebra-check", "--trials", "3"]) == 0
    assert (tmp_path / "algebra-check" / "report.json").exists()


# -- states ------------------------------------------------------------------

def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(0, 1, 100)
    with pytest.raises(ValueError):
        Grid(1, 0, 64)


def test_packet_normalized_and_moments():
    grid = Grid(-20, 20, 512)
    psi = GaussianPacket(1.0, 0.7, 0.4).on(grid)
    assert psi.norm2 == pytest.approx(1.0, abs=1e-12)
    m = psi.moments(PhysicsParams())
    assert m["x"] == pytest.approx(1.0, abs=1e-12)
    assert m["p"] == pytest.approx(0.4, abs=1e-10)
    assert m["x2"] - m["x"] ** 2 == pytest.approx(0.49, abs=1e-12)


def test_density_matrix_checks():
    grid = Grid(-5, 5, 16)
    with pytest.raises(ValueError):
        DensityMatrix(grid, np.triu(np.ones((16, 16))))
    psi = WaveFunction(grid, np.ones(16)).normalized()
    rho = DensityMatrix.pure(psi)
    assert rho.trace == pytest.approx(1.0)
    assert rho.purity == pytest.approx(1.0)
    assert rho.trace_distance(rho) == pytest.approx(0.0, abs=1e-14)
