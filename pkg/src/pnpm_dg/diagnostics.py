"""Error norms, convergence tables and entropy/limiter time series."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from pnpm_dg.basis import gauss_legendre, legendre_table, project
from pnpm_dg.problems import Problem
from pnpm_dg.scheme import Discretization, SchemeConfig, integrate, quadrature_n_nodes

CSV_HEADER = ("n_cells", "l2_error", "order", "theta_mean", "l2_error_uh")


@dataclass
class ErrorReport:
    """One row of a convergence table.

    ``l2_error`` is the reference-cell error of the reconstruction
    (:func:`reference_cell_error`); ``l2_error_uh`` the plain L2 error of the
    evolved degree-N solution.
    """

    n_cells: int
    l2_error: float
    observed_order: float | None = None
    theta_mean: float = 1.0
    l2_error_uh: float = float("nan")


def l2_error(coeffs: np.ndarray, grid, exact, t: float, n_nodes: int | None = None) -> float:
    """L2 distance between the piecewise polynomial and ``exact(x, t)``."""
    coeffs = np.asarray(coeffs, dtype=float)
    degree = coeffs.shape[1] - 1
    nodes, weights = gauss_legendre(n_nodes or 2 * quadrature_n_nodes(degree + 2))
    x = grid.physical_points(nodes)
    diff = coeffs @ legendre_table(degree, nodes) - exact(x, t)
    return math.sqrt(0.5 * grid.h * float((diff ** 2 @ weights).sum()))


def reference_cell_error(coeffs: np.ndarray, grid, exact, t: float,
                         n_nodes: int | None = None) -> float:
    """``sqrt(sum_i int_0^1 e_i(xi)^2 dxi)`` with each cell mapped to ``(0, 1)``.

    Equals :func:`l2_error` divided by ``sqrt(h)``, so its observed order
    is half an order below the L2 order.
    """
    return l2_error(coeffs, grid, exact, t, n_nodes) / math.sqrt(grid.h)


def observed_order(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    return math.log(e_coarse / e_fine) / math.log(ratio)


def convergence_table(problem: Problem, cfg: SchemeConfig, grids, t_end: float = 1.0,
                      convergence_dt: bool = True) -> list[ErrorReport]:
    grids = list(grids)
    if len(grids) < 2:
        raise ValueError("a convergence study needs at least 2 grids")
    if problem.exact is None:
        raise ValueError(f"problem {problem.name} has no exact solution")
    rows: list[ErrorReport] = []
    for n_cells in grids:
        grid = problem.grid(n_cells)
        disc = Discretization(grid, cfg, problem.model)
        u0 = project(problem.initial, grid, cfg.n)
        run = integrate(disc, u0, t_end, convergence=convergence_dt)
        nodes = 2 * quadrature_n_nodes(cfg.m)
        w = disc.reconstruct(run.coeffs)
        err = reference_cell_error(w, grid, problem.exact, t_end, nodes)
        thetas = run.theta_mean[1:] or [1.0]
        row = ErrorReport(n_cells, err, theta_mean=float(np.mean(thetas)),
                          l2_error_uh=l2_error(run.coeffs, grid, problem.exact, t_end, nodes))
        if rows:
            prev = rows[-1]
            row.observed_order = observed_order(prev.l2_error, err, n_cells / prev.n_cells)
        rows.append(row)
    return rows


def format_table_csv(rows: list[ErrorReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        order = "" if r.observed_order is None else f"{r.observed_order:.4f}"
        writer.writerow([r.n_cells, f"{r.l2_error:.6e}", order, f"{r.theta_mean:.6f}",
                         f"{r.l2_error_uh:.6e}"])
    return buf.getvalue()


@dataclass
class EntropySeries:
    times: np.ndarray
    entropy: np.ndarray
    theta_mean: np.ndarray

    def max_increase(self) -> float:
        if len(self.entropy) < 2:
            return 0.0
        return float(np.max(np.diff(self.entropy)))


def entropy_series(run) -> EntropySeries:
    return EntropySeries(np.asarray(run.times), np.asarray(run.entropy),
                         np.asarray(run.theta_mean))


def format_series_csv(series: EntropySeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("t", "entropy", "theta_mean"))
    for t, e, th in zip(series.times, series.entropy, series.theta_mean):
        writer.writerow([f"{t:.10e}", f"{e:.12e}", f"{th:.6f}"])
    return buf.getvalue()
