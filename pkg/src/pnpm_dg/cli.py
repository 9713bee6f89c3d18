"""Command line harness: single runs, convergence studies, the P1P5
counterexample and the invertibility table for ``M = 3N + 2``.

Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
4 counterexample not found.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from pnpm_dg.basis import BOUNDARIES, Grid, legendre_table, project
from pnpm_dg.diagnostics import (
    convergence_table,
    entropy_series,
    format_series_csv,
    format_table_csv,
)
from pnpm_dg.physics import NUMERICAL_FLUXES, UPWIND, InadmissibleStateError, LinearAdvection, make_model
from pnpm_dg.problems import PRESETS, Problem, get_problem
from pnpm_dg.reconstruction import appendix_a_invertibility, build_operator
from pnpm_dg.scheme import (
    INTEGRATORS,
    LINEAR_RK,
    Discretization,
    NumericalError,
    SchemeConfig,
    integrate,
    pointwise_condition_check,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_NOT_FOUND = 4

CUSTOM = "custom"
PLOT_POINTS = 8


class ConfigError(ValueError):
    pass


# {{{ run configuration


@dataclass
class RunConfig:
    problem: str = "advection_sin4"
    n: int = 1
    m: int = 2
    n_cells: int = 40
    t_end: float = 1.0
    limiter: bool = False
    flux: str = "rusanov"
    integrator: str = LINEAR_RK
    cfl: float = 0.9
    snapshots: tuple = ()
    grids: tuple = (10, 20, 40, 80, 160)
    out: str = ""
    # only used by the custom problem
    model: str = "advection"
    initial: str = ""
    domain: tuple = (-1.0, 1.0)
    boundary: str = "periodic"

    def scheme_config(self) -> SchemeConfig:
        try:
            return SchemeConfig(self.n, self.m, flux=self.flux, limiter=self.limiter,
                                cfl=self.cfl, integrator=self.integrator)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def validate(self):
        if self.problem not in PRESETS and self.problem != CUSTOM:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.flux not in NUMERICAL_FLUXES:
            raise ConfigError(f"unknown flux {self.flux!r}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"unknown integrator {self.integrator!r}")
        if self.n_cells < 3:
            raise ConfigError("need at least 3 cells")
        if self.t_end < 0:
            raise ConfigError("t_end must be non-negative")
        if self.problem == CUSTOM:
            if not self.initial:
                raise ConfigError("custom problem needs an 'initial' expression")
            if self.boundary not in BOUNDARIES:
                raise ConfigError(f"unknown boundary {self.boundary!r}")
        self.scheme_config()
        return self


_BOOL_TRUE = {"on", "true", "yes", "1"}
_BOOL_FALSE = {"off", "false", "no", "0"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _BOOL_TRUE:
        return True
    if low in _BOOL_FALSE:
        return False
    raise ConfigError(f"expected on/off, got {text!r}")


def _parse_list(text: str, kind) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(kind(v) for v in text.replace(" ", "").split(","))


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, value: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            return _parse_bool(value)
        if kind == "tuple":
            return _parse_list(value, int if key == "grids" else float)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return value.strip()


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, value)
    return replace(base or RunConfig(), **values)


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "on" if v else "off"
    if isinstance(v, tuple):
        return ", ".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_format_value(getattr(cfg, f.name))}\n" for f in fields(cfg))


# }}}


def _custom_problem(cfg: RunConfig) -> Problem:
    namespace = {name: getattr(np, name) for name in
                 ("sin", "cos", "exp", "tanh", "abs", "where", "pi", "sqrt")}
    expr = cfg.initial

    def initial(x):
        return np.broadcast_to(
            eval(expr, {"__builtins__": {}}, {**namespace, "x": x}), np.shape(x)).astype(float)

    try:
        initial(np.zeros(2))
    except Exception as exc:
        raise ConfigError(f"cannot evaluate initial data {expr!r}: {exc}") from None
    try:
        model = make_model(cfg.model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Problem(CUSTOM, model, initial, tuple(cfg.domain), cfg.boundary)


def resolve_problem(cfg: RunConfig) -> Problem:
    if cfg.problem == CUSTOM:
        return _custom_problem(cfg)
    try:
        return get_problem(cfg.problem)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def sample_cells(coeffs: np.ndarray, grid: Grid, per_cell: int = PLOT_POINTS):
    """Values at ``per_cell`` equispaced points per cell, end points included."""
    s = np.linspace(-1.0, 1.0, per_cell)
    x = grid.physical_points(s).ravel()
    values = (coeffs @ legendre_table(coeffs.shape[1] - 1, s)).ravel()
    return x, values


def format_snapshot_csv(grid: Grid, u: np.ndarray, w: np.ndarray) -> str:
    x, uh = sample_cells(u, grid)
    _, wh = sample_cells(w, grid)
    lines = ["x,u_h,w_h"]
    lines += [f"{a:.12e},{b:.12e},{c:.12e}" for a, b, c in zip(x, uh, wh)]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# {{{ subcommands


def cmd_run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    cfg.validate()
    problem = resolve_problem(cfg)
    grid = problem.grid(cfg.n_cells)
    scheme = cfg.scheme_config()
    disc = Discretization(grid, scheme, problem.model)
    u0 = project(problem.initial, grid, cfg.n)
    try:
        problem.model.check_admissible(problem.initial(grid.centers))
    except InadmissibleStateError as exc:
        raise ConfigError(f"initial data: {exc}") from None
    times = cfg.snapshots or (cfg.t_end,)
    run = integrate(disc, u0, cfg.t_end, snapshot_times=times)
    if 0.0 in times:
        run.snapshots[0.0] = u0

    out = Path(cfg.out or ".")
    for t in sorted(run.snapshots):
        u = run.snapshots[t]
        path = out / f"snapshot_t{t:.6f}.csv"
        _write(path, format_snapshot_csv(grid, u, disc.reconstruct(u)))
        print(f"wrote {path}", file=stdout)
    path = out / "entropy.csv"
    _write(path, format_series_csv(entropy_series(run)))
    print(f"wrote {path}", file=stdout)
    return EXIT_OK


def cmd_converge(cfg: RunConfig, limiter_modes=(False, True), stdout=None) -> int:
    stdout = stdout or sys.stdout
    cfg.validate()
    if len(cfg.grids) < 2:
        raise ConfigError("a convergence study needs >= 2 grids")
    problem = resolve_problem(cfg)
    if problem.exact is None:
        raise ConfigError(f"problem {problem.name} has no exact solution")
    for limited in limiter_modes:
        scheme = replace(cfg.scheme_config(), limiter=limited)
        rows = convergence_table(problem, scheme, cfg.grids, t_end=cfg.t_end)
        text = format_table_csv(rows)
        tag = f"P{cfg.n}P{cfg.m}_{'on' if limited else 'off'}"
        if cfg.out:
            path = Path(cfg.out) / f"converge_{tag}.csv"
            _write(path, text)
            print(f"wrote {path}", file=stdout)
        else:
            print(f"# {tag}", file=stdout)
            stdout.write(text)
    return EXIT_OK


# Piecewise-linear data (coefficients of P_0, P_1) on three consecutive
# cells: a steep ramp, a low cell falling towards the interface, and a
# jump up into a steep cell on the right.
COUNTEREXAMPLE_CELLS = np.array([[0.5, 1.0], [-1.0, -0.25], [0.5, 0.75]])
SMOOTH_CELLS = np.array([[-0.5, 0.25], [0.0, 0.25], [0.5, 0.25]])


@dataclass
class CounterexampleReport:
    u_minus: float
    u_plus: float
    w_minus: float
    violated: bool
    theta: float = 1.0
    entropy_production: float = 0.0
    lines: list = field(default_factory=list)

    @property
    def restored(self) -> bool:
        return self.theta < 1.0 and self.entropy_production >= 0.0


def counterexample(cells: np.ndarray = COUNTEREXAMPLE_CELLS, m: int = 5) -> CounterexampleReport:
    """Check the pointwise condition at the interface between cells 1 and 2,
    then run the limiter on a small periodic grid containing the data."""
    cells = np.asarray(cells, dtype=float)
    op = build_operator(1, m)
    left, centre, right = cells
    w = op.apply(left, centre, right)
    u_minus = float(centre.sum())
    u_plus = float(right[0] - right[1])
    w_minus = float(w.sum())
    report = CounterexampleReport(u_minus, u_plus, w_minus,
                                  not pointwise_condition_check(u_minus, u_plus, w_minus))

    # two flat cells at the level of the right cell close the periodic grid
    filler = np.array([[right[0] + right[1], 0.0]] * 2)
    grid = Grid(-1.0, 1.0, 5)
    cfg = SchemeConfig(1, m, flux=UPWIND, limiter=True)
    _, budget = Discretization(grid, cfg, LinearAdvection()).rhs(np.vstack([cells, filler]))
    report.theta = float(budget.theta[2])
    report.entropy_production = float(budget.entropy_production[2])
    return report


def cmd_counterexample(smooth: bool = False, stdout=None) -> int:
    stdout = stdout or sys.stdout
    rep = counterexample(SMOOTH_CELLS if smooth else COUNTEREXAMPLE_CELLS)
    mid = 0.5 * (rep.u_minus + rep.u_plus)
    print(f"u- = {rep.u_minus:.6f}  u+ = {rep.u_plus:.6f}", file=stdout)
    print(f"w- = {rep.w_minus:.6f}  (u- + u+)/2 = {mid:.6f}", file=stdout)
    if not rep.violated:
        print("pointwise condition holds: no violation found", file=stdout)
        return EXIT_NOT_FOUND
    print("pointwise condition violated", file=stdout)
    print(f"limiter: theta = {rep.theta:.6f}, "
          f"A - V - theta [[u]] f^r = {rep.entropy_production:.3e}", file=stdout)
    return EXIT_OK


def cmd_appendix(n_max: int, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if n_max < 0:
        raise ConfigError("n_max must be >= 0")
    print("n,min_singular_value,condition_number", file=stdout)
    for n in range(n_max + 1):
        rep = appendix_a_invertibility(n)
        print(f"{n},{rep.min_singular_value:.6e},{rep.condition_number:.6e}", file=stdout)
    return EXIT_OK


# }}}


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--problem", choices=sorted(PRESETS) + [CUSTOM])
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--flux", choices=NUMERICAL_FLUXES)
    p.add_argument("--integrator", choices=INTEGRATORS)
    p.add_argument("--cfl", type=float)
    p.add_argument("--tend", type=float, dest="t_end")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pnpm-dg", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evolve one configuration and write snapshots")
    _add_run_flags(run)
    run.add_argument("--cells", type=int, dest="n_cells")
    run.add_argument("--limiter", choices=("on", "off"))
    run.add_argument("--snapshots", help="comma-separated output times")

    conv = sub.add_parser("converge", help="convergence table on a grid sequence")
    _add_run_flags(conv)
    conv.add_argument("--cells", dest="grids", help="comma-separated cell counts")
    conv.add_argument("--limiter", choices=("on", "off", "both"), default="both")

    ce = sub.add_parser("counterexample", help="P1P5 data violating the pointwise condition")
    ce.add_argument("--smooth", action="store_true", help="use jump-free data instead")

    app = sub.add_parser("appendix", help="invertibility of B for N = 0..n_max")
    app.add_argument("--n-max", type=int, default=6)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = parse_config(text, cfg)
    overrides = {}
    for key in ("problem", "n", "m", "flux", "integrator", "cfl", "t_end", "out", "n_cells"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "snapshots", None):
        overrides["snapshots"] = _convert("snapshots", args.snapshots)
    if getattr(args, "grids", None):
        overrides["grids"] = _convert("grids", args.grids)
    if args.command == "run" and args.limiter is not None:
        overrides["limiter"] = args.limiter == "on"
    return replace(cfg, **overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "appendix":
            return cmd_appendix(args.n_max)
        if args.command == "counterexample":
            return cmd_counterexample(args.smooth)
        cfg = config_from_args(args)
        if args.command == "run":
            return cmd_run(cfg)
        modes = {"on": (True,), "off": (False,), "both": (False, True)}[args.limiter]
        return cmd_converge(cfg, modes)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, InadmissibleStateError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
