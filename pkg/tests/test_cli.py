import io

import numpy as np
import pytest

from pnpm_dg.basis import project
from pnpm_dg.cli import (
    EXIT_BLOWUP,
    EXIT_CONFIG,
    EXIT_NOT_FOUND,
    EXIT_OK,
    SMOOTH_CELLS,
    ConfigError,
    RunConfig,
    cmd_appendix,
    counterexample,
    main,
    parse_config,
    serialize_config,
)
from pnpm_dg.problems import get_problem

SAMPLE = """
# a comment
problem = burgers_gaussians
n = 2
m = 4
n_cells = 40
t_end = 0.05
limiter = on
integrator = ssprk4
snapshots = 0.01, 0.05
"""


def test_parse_config():
    cfg = parse_config(SAMPLE)
    assert cfg.problem == "burgers_gaussians"
    assert (cfg.n, cfg.m, cfg.n_cells) == (2, 4, 40)
    assert cfg.limiter is True
    assert cfg.snapshots == (0.01, 0.05)


def test_config_round_trip():
    cfg = parse_config(SAMPLE)
    text = serialize_config(cfg)
    assert parse_config(text) == cfg
    assert serialize_config(parse_config(text)) == text
    assert parse_config(serialize_config(RunConfig())) == RunConfig()


@pytest.mark.parametrize("text", ["n = two", "colour = red", "just words", "limiter = maybe"])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_validate():
    with pytest.raises(ConfigError):
        RunConfig(n=3, m=2).validate()
    with pytest.raises(ConfigError):
        RunConfig(problem="euler").validate()
    with pytest.raises(ConfigError):
        RunConfig(problem="custom").validate()


def test_run_writes_snapshots(tmp_path, capsys):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(SAMPLE)
    rc = main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "out")])
    assert rc == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert files == ["entropy.csv", "snapshot_t0.010000.csv", "snapshot_t0.050000.csv"]
    lines = (tmp_path / "out" / "snapshot_t0.010000.csv").read_text().splitlines()
    assert lines[0] == "x,u_h,w_h"
    assert len(lines) == 1 + 40 * 8


def test_run_is_deterministic(tmp_path):
    args = ["run", "--problem", "traffic_sine", "--n", "1", "--m", "3", "--cells", "20",
            "--tend", "0.1", "--limiter", "on"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("entropy.csv", "snapshot_t0.100000.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_t0_gives_projection(tmp_path):
    rc = main(["run", "--problem", "advection_sin4", "--n", "2", "--m", "4", "--cells", "10",
               "--tend", "0", "--out", str(tmp_path)])
    assert rc == EXIT_OK
    data = np.loadtxt(tmp_path / "snapshot_t0.000000.csv", delimiter=",", skiprows=1)
    problem = get_problem("advection_sin4")
    grid = problem.grid(10)
    u0 = project(problem.initial, grid, 2)
    s = np.linspace(-1, 1, 8)
    ref = (u0 @ np.polynomial.legendre.legvander(s, 2).T).ravel()
    np.testing.assert_allclose(data[:, 1], ref, atol=1e-11)


def test_custom_problem(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("problem = custom\nmodel = burgers\ninitial = 0.5 + 0.1 * sin(pi * x)\n"
                   "n = 1\nm = 2\nn_cells = 10\nt_end = 0.1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    cfg.write_text("problem = custom\ninitial = __import__('os')\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_converge(tmp_path):
    rc = main(["converge", "--n", "1", "--m", "2", "--cells", "10,20", "--limiter", "off",
               "--out", str(tmp_path)])
    assert rc == EXIT_OK
    rows = (tmp_path / "converge_P1P2_off.csv").read_text().splitlines()
    assert len(rows) == 3


def test_converge_single_grid_is_config_error():
    assert main(["converge", "--cells", "10"]) == EXIT_CONFIG


def test_bad_degrees_is_config_error(tmp_path):
    assert main(["run", "--n", "3", "--m", "1", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_inadmissible_initial_data_is_config_error(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("problem = custom\nmodel = traffic\ninitial = 1.5 + 0 * x\nn = 1\nm = 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_blow_up_exit_code(tmp_path, monkeypatch):
    import pnpm_dg.cli as cli
    from pnpm_dg.scheme import BlowUpError

    def explode(*args, **kwargs):
        raise BlowUpError("solution blew up at t=0.1")

    monkeypatch.setattr(cli, "integrate", explode)
    assert main(["run", "--cells", "10", "--out", str(tmp_path)]) == EXIT_BLOWUP


def test_counterexample():
    rep = counterexample()
    assert rep.violated
    assert rep.theta < 1.0
    assert rep.entropy_production >= 0.0
    assert rep.restored
    assert not counterexample(SMOOTH_CELLS).violated
    assert main(["counterexample"]) == EXIT_OK
    assert main(["counterexample", "--smooth"]) == EXIT_NOT_FOUND


def test_appendix_output():
    out = io.StringIO()
    assert cmd_appendix(0, stdout=out) == EXIT_OK
    lines = out.getvalue().splitlines()
    assert len(lines) == 2 and float(lines[1].split(",")[1]) > 0
    out = io.StringIO()
    cmd_appendix(6, stdout=out)
    rows = out.getvalue().splitlines()[1:]
    assert len(rows) == 7 and all(float(r.split(",")[1]) > 0 for r in rows)
    assert main(["appendix", "--n-max", "-1"]) == EXIT_CONFIG


def test_argparse_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--problem", "nonsense"])
    assert exc.value.code == 2
