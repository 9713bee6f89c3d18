import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnpm_dg.basis import Grid, project
from pnpm_dg.diagnostics import (
    CSV_HEADER,
    ErrorReport,
    EntropySeries,
    convergence_table,
    entropy_series,
    format_series_csv,
    format_table_csv,
    l2_error,
    observed_order,
    reference_cell_error,
)
from pnpm_dg.physics import UPWIND
from pnpm_dg.problems import get_problem
from pnpm_dg.scheme import SSPRK4, Discretization, SchemeConfig, integrate


def zero(x, t):
    return np.zeros_like(x)


def test_zero_error():
    grid = Grid(-1.0, 1.0, 5)
    assert l2_error(np.zeros((5, 3)), grid, zero, 0.0) == 0.0


def test_error_of_known_function():
    grid = Grid(0.0, 1.0, 4)
    coeffs = np.zeros((4, 1))
    # || x ||_{L2(0,1)} = 1/sqrt(3)
    assert l2_error(coeffs, grid, lambda x, t: x, 0.0) == pytest.approx(1 / math.sqrt(3), rel=1e-13)
    assert reference_cell_error(coeffs, grid, lambda x, t: x, 0.0) == pytest.approx(
        1 / math.sqrt(3) / math.sqrt(0.25), rel=1e-13)


def test_error_symmetry(rng):
    grid = Grid(-1.0, 1.0, 7)
    c = rng.standard_normal((7, 3))

    def ex(x, t):
        return np.sin(3 * x + t)

    def neg(x, t):
        return -ex(x, t)

    assert l2_error(c, grid, ex, 0.2) == pytest.approx(l2_error(-c, grid, neg, 0.2), rel=1e-14)


def test_projection_error_order():
    problem = get_problem("advection_sin4")
    errs = []
    for n_cells in (40, 80):
        grid = problem.grid(n_cells)
        errs.append(l2_error(project(problem.initial, grid, 2), grid, problem.exact, 0.0))
    assert observed_order(*errs) == pytest.approx(3.0, abs=0.1)


@settings(max_examples=100, deadline=None)
@given(p=st.floats(0.5, 12), c=st.floats(1e-3, 1e3), h=st.floats(1e-3, 0.5))
def test_order_formula_recovers_exponent(p, c, h):
    assert observed_order(c * h ** p, c * (h / 2) ** p) == pytest.approx(p, abs=1e-10)


def test_convergence_table_p0_upwind():
    problem = get_problem("advection_sin4")
    rows = convergence_table(problem, SchemeConfig(0, 0, flux=UPWIND), [10, 20])
    assert rows[0].observed_order is None
    # first order in L2; the reference-cell measure sits half an order lower
    assert observed_order(rows[0].l2_error_uh, rows[1].l2_error_uh) == pytest.approx(1.0, abs=0.15)
    assert rows[1].observed_order == pytest.approx(0.5, abs=0.15)


def test_convergence_table_rejects_single_grid():
    with pytest.raises(ValueError):
        convergence_table(get_problem("advection_sin4"), SchemeConfig(1, 2), [10])
    with pytest.raises(ValueError):
        convergence_table(get_problem("traffic_sine"), SchemeConfig(1, 2), [10, 20])


def test_csv_format():
    rows = [ErrorReport(10, 1.23456e-3, None, 0.75, 2e-3), ErrorReport(20, 1e-4, 3.62, 1.0, 3e-4)]
    text = format_table_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_HEADER
    assert parsed[0][:4] == ["n_cells", "l2_error", "order", "theta_mean"]
    assert parsed[1][:3] == ["10", "1.234560e-03", ""]
    assert float(parsed[2][2]) == pytest.approx(3.62)
    assert text == format_table_csv(rows)


def test_constant_state_entropy_is_constant():
    grid = Grid(-1.0, 1.0, 10)
    u = np.zeros((10, 2))
    u[:, 0] = 0.3
    run = integrate(Discretization(grid, SchemeConfig(1, 3, limiter=True), get_problem("advection_sin4").model),
                    u, 0.5)
    series = entropy_series(run)
    np.testing.assert_allclose(series.entropy, series.entropy[0], rtol=1e-14)


def test_linear_limited_entropy_non_increasing():
    problem = get_problem("advection_sin4")
    grid = problem.grid(20)
    disc = Discretization(grid, SchemeConfig(1, 4, limiter=True), problem.model)
    series = entropy_series(integrate(disc, project(problem.initial, grid, 1), 0.5))
    assert series.max_increase() <= 1e-10 * series.entropy[0]
    assert len(series.times) == len(series.theta_mean)


def test_burgers_entropy_decays_after_shocks():
    problem = get_problem("burgers_gaussians")
    grid = problem.grid(80)
    disc = Discretization(grid, SchemeConfig(2, 4, limiter=True, integrator=SSPRK4), problem.model)
    series = entropy_series(integrate(disc, project(problem.initial, grid, 2), 0.2))
    late = series.times > 0.1
    assert np.all(np.diff(series.entropy[late]) < 0)


def test_series_csv():
    s = EntropySeries(np.array([0.0, 0.1]), np.array([1.0, 0.9]), np.array([1.0, 0.5]))
    lines = format_series_csv(s).splitlines()
    assert lines[0] == "t,entropy,theta_mean"
    assert len(lines) == 3
    assert EntropySeries(np.zeros(1), np.ones(1), np.ones(1)).max_increase() == 0.0
