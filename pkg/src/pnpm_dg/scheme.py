"""Semi-discrete P_NP_M right-hand side, square-entropy flux limiter and time stepping.

Cell ``i`` evolves the degree-N coefficients ``u_hat`` with

    h/(2k+1) du_hat_k/dt = -f_{i+1/2} P_k(1) + f_{i-1/2} P_k(-1)
                           + int_{-1}^{1} f(w_h) P_k'(s) ds,

where ``w_h`` is the degree-M reconstruction.  With the limiter switched
on the interface flux is ``f = f^u + theta (f^w - f^u)``, and ``theta`` at
the left interface of cell ``i`` is chosen such that

    A_i - V_i - theta [[u]] (f^w - f^u) >= 0,

which makes the square entropy ``E_i = int u_h^2 / 2`` satisfy a cell
entropy inequality.  If no ``theta`` in ``[0, 1]`` works, the residual
``w_h - u_h`` inside the cell is scaled down until ``A_i - V_i >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from pnpm_dg.basis import PERIODIC, Grid, ReferenceBasis
from pnpm_dg.physics import RUSANOV, FluxModel, numerical_flux
from pnpm_dg.reconstruction import (
    ModalField,
    ReconOperator,
    build_operator,
    check_degrees,
    pad_cells,
    reconstruct_padded,
)

LINEAR_RK = "linear_rk"
SSPRK4 = "ssprk4"
INTEGRATORS = (LINEAR_RK, SSPRK4)

FALLBACK_GRID = np.linspace(1.0, 0.0, 11)
# absolute slack allowed in the cell entropy condition; assumes O(1) data
ENTROPY_TOL = 5e-11
BLOWUP_FACTOR = 1e6


class NumericalError(RuntimeError):
    pass


class BlowUpError(NumericalError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    n: int
    m: int
    flux: str = RUSANOV
    limiter: bool = False
    cfl: float = 0.9
    integrator: str = LINEAR_RK
    fallback: bool = True
    entropy_tol: float = ENTROPY_TOL

    def __post_init__(self):
        check_degrees(self.n, self.m)
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}")


@dataclass
class EntropyBudget:
    """Per-cell and per-interface terms of the discrete entropy balance.

    Interface arrays have ``n_cells + 1`` entries; entry ``i`` is the left
    interface of cell ``i``.  Cell arrays have ``n_cells`` entries.
    """

    A: np.ndarray
    V: np.ndarray
    jump: np.ndarray
    fr: np.ndarray
    theta: np.ndarray
    cell_theta: np.ndarray
    flux: np.ndarray
    u_minus: np.ndarray

    @property
    def entropy_production(self) -> np.ndarray:
        """``A - V - theta [[u]] f^r`` per cell; non-negative when limited."""
        d = self.jump[:-1] * self.fr[:-1]
        return self.A - self.V - self.theta[:-1] * d


# per-interface theta and per-cell fallback factors of one RHS evaluation
LimiterRecord = EntropyBudget


# {{{ limiter


def limiter_theta(A, V, jump, fr, tol: float = ENTROPY_TOL):
    """Limiter value per interface.

    ``theta = 1`` whenever ``A - V - jump fr >= -tol``.  Otherwise ``theta``
    is the largest value in ``[0, 1]`` with ``A - V - theta jump fr >= 0``,
    or 0 if there is none; the caller then falls back to limiting inside
    the cell.
    """
    A = np.asarray(A, dtype=float)
    V = np.asarray(V, dtype=float)
    d = np.asarray(jump, dtype=float) * np.asarray(fr, dtype=float)
    slack = A - V

    positive = d > 0.0
    safe = np.where(positive, d, 1.0)
    with np.errstate(over="ignore"):
        # tiny d overflows the ratio; clipping still gives the right answer
        theta = np.where(positive, np.clip(slack / safe, 0.0, 1.0), 0.0)
    theta = np.where(slack - d >= -tol, 1.0, theta)
    return theta[()] if theta.ndim == 0 else theta


def volume_flux_difference(model: FluxModel, basis_n: ReferenceBasis, basis_m: ReferenceBasis,
                           u_hat: np.ndarray, r_hat: np.ndarray, scale=1.0) -> np.ndarray:
    """``V = int (f(u + scale r) - f(u)) u_s ds`` per cell (reference units)."""
    u = u_hat @ basis_n.phi
    ux = u_hat @ basis_n.dphi
    r = r_hat @ basis_m.phi
    scale = np.asarray(scale, dtype=float)
    if scale.ndim:
        scale = scale[:, None]
    diff = model.flux_difference(u + scale * r, u)
    return (diff * ux) @ basis_n.weights


def in_cell_fallback(u_cell, w_cell, A: float, model: FluxModel, tol: float = ENTROPY_TOL):
    """Scale the residual of one cell until ``A - V >= -tol``.

    Returns ``(theta_i, blended)`` where ``blended = u + theta_i (w - u)``
    as a degree-M coefficient vector and ``theta_i`` is the largest value
    on the grid ``1, 0.9, ..., 0`` that satisfies the condition.
    """
    u_cell = np.asarray(u_cell, dtype=float)
    w_cell = np.asarray(w_cell, dtype=float)
    n, m = len(u_cell) - 1, len(w_cell) - 1
    bn, bm = ReferenceBasis(n, quadrature_n_nodes(m)), ReferenceBasis(m, quadrature_n_nodes(m))
    r = w_cell.copy()
    r[:n + 1] = 0.0
    theta_i = _scan_fallback(model, bn, bm, u_cell[None], r[None], np.array([A]), tol)[0]
    blended = np.zeros(m + 1)
    blended[:n + 1] = u_cell
    blended += theta_i * r
    return float(theta_i), blended


def _scan_fallback(model, bn, bm, u_hat, r_hat, A, tol) -> np.ndarray:
    out = np.zeros(len(A))
    for k in range(len(A)):
        for t in FALLBACK_GRID:
            v = volume_flux_difference(model, bn, bm, u_hat[k:k + 1], r_hat[k:k + 1], t)[0]
            if A[k] - v >= -tol:
                out[k] = t
                break
    return out


# }}}


def quadrature_n_nodes(m: int) -> int:
    return m + 2


class Discretization:
    """Precomputed tables for one (grid, degrees, model) combination."""

    def __init__(self, grid: Grid, cfg: SchemeConfig, model: FluxModel,
                 op: ReconOperator | None = None):
        self.grid = grid
        self.cfg = cfg
        self.model = model
        self.op = op or build_operator(cfg.n, cfg.m)
        if (self.op.n, self.op.m) != (cfg.n, cfg.m):
            raise ValueError("operator degrees do not match the configuration")
        q = quadrature_n_nodes(cfg.m)
        self.bn = ReferenceBasis(cfg.n, q)
        self.bm = ReferenceBasis(cfg.m, q)
        k = np.arange(cfg.n + 1)
        self.inv_mass = (2 * k + 1) / grid.h
        self.left_sign = (-1.0) ** k

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        padded = pad_cells(coeffs, self.grid.boundary, 1)
        return reconstruct_padded(self.op, padded)

    def rhs(self, coeffs: np.ndarray) -> tuple[np.ndarray, EntropyBudget]:
        cfg, model, bn, bm = self.cfg, self.model, self.bn, self.bm
        nc = self.grid.n_cells
        n = cfg.n
        if not np.all(np.isfinite(coeffs)):
            bad = int(np.argwhere(~np.isfinite(coeffs))[0, 0])
            raise NumericalError(f"non-finite coefficient in cell {bad}")

        # cells -1 .. nc, i.e. one ghost on each side
        padded = pad_cells(coeffs, self.grid.boundary, 2)
        u_ext = padded[1:-1]
        w_ext = reconstruct_padded(self.op, padded)

        u_minus = u_ext[:-1] @ bn.phi_right
        u_plus = u_ext[1:] @ bn.phi_left
        w_minus = w_ext[:-1] @ bm.phi_right
        w_plus = w_ext[1:] @ bm.phi_left

        f_u = numerical_flux(cfg.flux, model, u_minus, u_plus)
        f_w = numerical_flux(cfg.flux, model, w_minus, w_plus)
        fr = f_w - f_u
        jump = u_plus - u_minus

        # budget of cells 0 .. nc, each owning its left interface
        u_own = u_ext[1:]
        r_own = w_ext[1:].copy()
        r_own[:, :n + 1] = 0.0
        A = jump * (model.mean_flux(u_minus, u_plus) - f_u)
        V = volume_flux_difference(model, bn, bm, u_own, r_own)

        cell_theta = np.ones(nc + 1)
        if cfg.limiter:
            theta = limiter_theta(A, V, jump, fr, cfg.entropy_tol)
            if cfg.fallback:
                bad = np.flatnonzero((theta == 0.0) & (A - V < -cfg.entropy_tol))
                if bad.size:
                    cell_theta[bad] = _scan_fallback(model, bn, bm, u_own[bad], r_own[bad], A[bad],
                                                    cfg.entropy_tol)
                    V[bad] = volume_flux_difference(
                        model, bn, bm, u_own[bad], r_own[bad], cell_theta[bad])
        else:
            theta = np.ones(nc + 1)

        if self.grid.boundary == PERIODIC:
            theta[nc] = theta[0]
        flux = f_u + theta * fr
        if self.grid.boundary == PERIODIC:
            flux[nc] = flux[0]

        w_vol = u_own[:nc] @ bn.phi + (cell_theta[:nc, None] * r_own[:nc]) @ bm.phi
        volume = (model.f(w_vol) * bn.weights) @ bn.dphi.T

        dudt = self.inv_mass * (-flux[1:, None] + self.left_sign * flux[:-1, None] + volume)
        if not np.all(np.isfinite(dudt)):
            bad = int(np.argwhere(~np.isfinite(dudt))[0, 0])
            raise NumericalError(f"non-finite time derivative in cell {bad}")

        budget = EntropyBudget(
            A=A[:nc], V=V[:nc], jump=jump, fr=fr, theta=theta,
            cell_theta=cell_theta[:nc], flux=flux, u_minus=u_minus)
        return dudt, budget

    def entropy(self, coeffs: np.ndarray) -> np.ndarray:
        """Cell entropies ``E_i = int u_h^2 / 2 dx``."""
        return 0.5 * (coeffs ** 2 * (self.grid.h / (2 * np.arange(self.cfg.n + 1) + 1))).sum(axis=1)

    def entropy_rate(self, coeffs: np.ndarray, dudt: np.ndarray) -> float:
        """``d/dt sum_i E_i = sum_i int u_h du_h/dt dx``."""
        return float((coeffs * dudt / self.inv_mass).sum())


def semidiscrete_rhs(u: ModalField, cfg: SchemeConfig, op: ReconOperator, model: FluxModel):
    disc = Discretization(u.grid, cfg, model, op)
    return disc.rhs(u.coeffs)


def entropy_budget(u: ModalField, cfg: SchemeConfig, model: FluxModel) -> EntropyBudget:
    return Discretization(u.grid, cfg, model).rhs(u.coeffs)[1]


def pointwise_condition_check(u_minus: float, u_plus: float, w_minus: float) -> bool:
    """Sufficient entropy condition for linear advection with upwinding."""
    mid = 0.5 * (u_minus + u_plus)
    if u_minus > u_plus:
        return w_minus >= mid
    if u_minus < u_plus:
        return w_minus <= mid
    return True


# {{{ time integration


def linear_rk_coefficients(stages: int) -> np.ndarray:
    """Weights ``alpha_{s,k}`` of the s-stage linear SSP Runge-Kutta method.

    For linear autonomous problems the method reproduces the Taylor
    polynomial ``sum_j (dt L)^j / j!`` of degree ``stages``.
    """
    alpha = np.array([1.0])
    for s in range(2, stages + 1):
        new = np.zeros(s)
        new[1:s - 1] = alpha[:s - 2] / np.arange(1, s - 1)
        new[s - 1] = 1.0 / np.prod(np.arange(1, s + 1, dtype=float))
        new[0] = 1.0 - new[1:].sum()
        alpha = new
    return alpha


def linear_rk_step(rhs: Callable, u: np.ndarray, dt: float, stages: int) -> np.ndarray:
    alpha = linear_rk_coefficients(stages)
    history = [u]
    v = u
    for _ in range(stages - 1):
        v = v + dt * rhs(v)
        history.append(v)
    out = alpha[-1] * (v + dt * rhs(v))
    for a, h in zip(alpha[:-1], history[:-1]):
        out = out + a * h
    return out


# Spiteri & Ruuth, five-stage fourth-order SSP
_SSP54_A = (
    (1.0, 0.0, 0.0, 0.0, 0.0),
    (0.444370493651235, 0.555629506348765, 0.0, 0.0, 0.0),
    (0.620101851488403, 0.0, 0.379898148511597, 0.0, 0.0),
    (0.178079954393132, 0.0, 0.0, 0.821920045606868, 0.0),
    (0.0, 0.0, 0.517231671970585, 0.096059710526147, 0.386708617503269),
)
_SSP54_B = (
    (0.391752226571890, 0.0, 0.0, 0.0, 0.0),
    (0.0, 0.368410593050371, 0.0, 0.0, 0.0),
    (0.0, 0.0, 0.251891774271694, 0.0, 0.0),
    (0.0, 0.0, 0.0, 0.544974750228521, 0.0),
    (0.0, 0.0, 0.0, 0.063692468666290, 0.226007483236906),
)


def ssprk4_step(rhs: Callable, u: np.ndarray, dt: float) -> np.ndarray:
    stages = [u]
    derivs = []
    for a_row, b_row in zip(_SSP54_A, _SSP54_B):
        derivs.append(rhs(stages[-1]))
        v = sum(a * s for a, s in zip(a_row, stages) if a) \
            + dt * sum(b * d for b, d in zip(b_row, derivs) if b)
        stages.append(v)
    return stages[-1]


@dataclass
class StepRecord:
    theta_mean: float
    budgets: list = field(default_factory=list)


def step(disc: Discretization, coeffs: np.ndarray, dt: float,
         keep_budgets: bool = False) -> tuple[np.ndarray, StepRecord]:
    """Advance ``coeffs`` by ``dt``; the limiter acts in every stage."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    record = StepRecord(theta_mean=1.0)
    if dt == 0:
        return coeffs.copy(), record
    thetas = []

    def rhs(v):
        dudt, budget = disc.rhs(v)
        thetas.append(budget.theta[:-1])
        if keep_budgets:
            record.budgets.append((v, dudt, budget))
        return dudt

    if disc.cfg.integrator == LINEAR_RK:
        out = linear_rk_step(rhs, coeffs, dt, disc.cfg.m + 1)
    else:
        out = ssprk4_step(rhs, coeffs, dt)
    record.theta_mean = float(np.mean(thetas))
    return out, record


def compute_dt(coeffs: np.ndarray, grid: Grid, cfg: SchemeConfig, model: FluxModel,
               cap: float | None = None, convergence: bool = False) -> float:
    """``cfl * h / ((2N + 1) max |f'|)``, optionally shrunk for convergence runs.

    In convergence mode with the fourth-order SSP integrator and
    ``M + 1 > 4`` the step is scaled like ``h^((M+1)/4)`` so the time error
    keeps up with the spatial order.
    """
    basis = ReferenceBasis(cfg.n, quadrature_n_nodes(cfg.m))
    samples = np.concatenate([coeffs @ basis.phi, coeffs @ basis.phi_left[:, None],
                              coeffs @ basis.phi_right[:, None]], axis=1)
    smax = model.max_speed(samples)
    if smax == 0.0:
        if cap is None:
            raise ValueError("zero wave speed and no cap on the time step")
        return cap
    dt = cfg.cfl * grid.h / ((2 * cfg.n + 1) * smax)
    if convergence and cfg.integrator == SSPRK4 and cfg.m + 1 > 4:
        dt *= grid.h ** ((cfg.m + 1) / 4.0 - 1.0)
    if cap is not None:
        dt = min(dt, cap)
    return dt


# }}}


@dataclass
class RunResult:
    coeffs: np.ndarray
    t: float
    times: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    theta_mean: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)


def integrate(disc: Discretization, coeffs: np.ndarray, t_end: float,
              snapshot_times=(), convergence: bool = False, dt: float | None = None,
              on_step: Callable | None = None, keep_budgets: bool = False) -> RunResult:
    """March from ``t = 0`` to ``t_end``, landing exactly on snapshot times."""
    snaps = {float(t) for t in snapshot_times if 0.0 <= t <= t_end}
    targets = sorted(snaps | {float(t_end)})
    u = np.array(coeffs, dtype=float)
    ref = max(np.abs(u).max(), 1e-300)
    res = RunResult(coeffs=u, t=0.0)
    res.times.append(0.0)
    res.entropy.append(float(disc.entropy(u).sum()))
    res.theta_mean.append(1.0)
    t = 0.0
    for target in targets:
        while t < target - 1e-14 * max(1.0, target):
            remaining = target - t
            k = dt if dt is not None else compute_dt(
                u, disc.grid, disc.cfg, disc.model, cap=remaining, convergence=convergence)
            k = min(k, remaining)
            u, rec = step(disc, u, k, keep_budgets=keep_budgets)
            t = target if k == remaining else t + k
            if np.abs(u).max() > BLOWUP_FACTOR * ref:
                raise BlowUpError(f"solution blew up at t={t:.6g}")
            res.times.append(t)
            res.entropy.append(float(disc.entropy(u).sum()))
            res.theta_mean.append(rec.theta_mean)
            if on_step is not None:
                on_step(t, u, rec)
        if target in snaps:
            res.snapshots[target] = u.copy()
    res.coeffs = u
    res.t = t
    return res
