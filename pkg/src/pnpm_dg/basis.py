"""Legendre polynomials, Gauss quadrature and the uniform 1D grid.

Everything lives on the reference cell ``(-1, 1)``.  Cell ``i`` of a
:class:`Grid` is mapped affinely onto it, so a modal coefficient vector
``u_hat`` represents ``u(x) = sum_k u_hat[k] * P_k(s(x))``.  The basis is
orthogonal but not normalised: ``int P_k P_k ds = 2 / (2k + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

PERIODIC = "periodic"
TRANSMISSIVE = "transmissive"
BOUNDARIES = (PERIODIC, TRANSMISSIVE)


def legendre_table(max_degree: int, s) -> np.ndarray:
    """Values ``P_0(s), ..., P_K(s)`` stacked along the first axis.

    Uses the Bonnet recurrence, which stays well behaved on the extended
    stencil range ``[-3, 3]``.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty((max_degree + 1,) + s.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = s
    for k in range(1, max_degree):
        out[k + 1] = ((2 * k + 1) * s * out[k] - k * out[k - 1]) / (k + 1)
    return out


def legendre_deriv_table(max_degree: int, s) -> np.ndarray:
    """Derivatives ``P_0'(s), ..., P_K'(s)`` stacked along the first axis."""
    s = np.asarray(s, dtype=float)
    p = legendre_table(max_degree, s)
    out = np.zeros_like(p)
    # P'_{k+1} = P'_{k-1} + (2k + 1) P_k
    for k in range(max_degree):
        prev = out[k - 1] if k >= 1 else 0.0
        out[k + 1] = prev + (2 * k + 1) * p[k]
    return out


def legendre_eval(k: int, s):
    """Evaluate ``P_k`` at ``s``; defined as a polynomial on all of R."""
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    return legendre_table(k, s)[k]


def legendre_deriv(k: int, s):
    if k < 0:
        raise ValueError(f"degree must be non-negative, got {k}")
    return legendre_deriv_table(k, s)[k]


def legendre_norms(max_degree: int) -> np.ndarray:
    """``int_{-1}^{1} P_k^2 ds = 2 / (2k + 1)`` for ``k = 0..K``."""
    k = np.arange(max_degree + 1)
    return 2.0 / (2.0 * k + 1.0)


@lru_cache(maxsize=None)
def gauss_legendre(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def quadrature_nodes_for(max_degree: int) -> int:
    # exact up to degree 2*max_degree + 3
    return max(max_degree + 2, -(-(2 * max_degree + 4) // 2))


@dataclass(frozen=True)
class ReferenceBasis:
    """Legendre basis up to ``max_degree`` together with a Gauss rule.

    The default rule integrates polynomials up to degree
    ``2 * max_degree + 3`` exactly.  Tables of ``P_k`` and ``P_k'`` at the
    quadrature nodes and at the two cell edges are precomputed.
    """

    max_degree: int
    n_nodes: int = 0
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)
    dphi: np.ndarray = field(init=False, repr=False)
    phi_left: np.ndarray = field(init=False, repr=False)
    phi_right: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.max_degree < 0:
            raise ValueError("max_degree must be >= 0")
        n_nodes = self.n_nodes or quadrature_nodes_for(self.max_degree)
        object.__setattr__(self, "n_nodes", n_nodes)
        nodes, weights = gauss_legendre(n_nodes)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "phi", legendre_table(self.max_degree, nodes))
        object.__setattr__(self, "dphi", legendre_deriv_table(self.max_degree, nodes))
        object.__setattr__(self, "phi_left", legendre_table(self.max_degree, -1.0))
        object.__setattr__(self, "phi_right", legendre_table(self.max_degree, 1.0))

    @property
    def norms(self) -> np.ndarray:
        return legendre_norms(self.max_degree)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate samples at the nodes over ``(-1, 1)`` along the last axis."""
        return values @ self.weights


@dataclass(frozen=True)
class Grid:
    """Uniform partition of ``[a, b]`` into ``n_cells`` cells."""

    a: float
    b: float
    n_cells: int
    boundary: str = PERIODIC

    def __post_init__(self):
        if self.n_cells < 3:
            raise ValueError(f"need at least 3 cells, got {self.n_cells}")
        if not self.b > self.a:
            raise ValueError(f"empty domain [{self.a}, {self.b}]")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n_cells

    @property
    def interfaces(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n_cells + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.a + self.h * (np.arange(self.n_cells) + 0.5)

    def _check_cell(self, i: int):
        if not 0 <= i < self.n_cells:
            raise IndexError(f"cell {i} out of range [0, {self.n_cells})")

    def cell_to_reference(self, i: int, x):
        self._check_cell(i)
        xc = self.a + (i + 0.5) * self.h
        return 2.0 * (np.asarray(x, dtype=float) - xc) / self.h

    def reference_to_cell(self, i: int, s):
        self._check_cell(i)
        xc = self.a + (i + 0.5) * self.h
        return xc + 0.5 * self.h * np.asarray(s, dtype=float)

    def physical_points(self, s) -> np.ndarray:
        """Physical coordinates of reference points ``s`` in every cell, shape (n_cells, len(s))."""
        s = np.asarray(s, dtype=float)
        return self.centers[:, None] + 0.5 * self.h * s[None, :]


def cell_to_reference(grid: Grid, i: int, x):
    return grid.cell_to_reference(i, x)


def mass_diagonal(max_degree: int, h: float) -> np.ndarray:
    """Diagonal of the physical-cell mass matrix, ``h / (2k + 1)``."""
    return 0.5 * h * legendre_norms(max_degree)


def project(func, grid: Grid, degree: int, n_nodes: int | None = None) -> np.ndarray:
    """L2 projection of ``func(x)`` onto piecewise polynomials of ``degree``.

    Returns an ``(n_cells, degree + 1)`` coefficient array.
    """
    nodes, weights = gauss_legendre(n_nodes or 2 * (degree + 4))
    x = grid.physical_points(nodes)
    values = np.asarray(func(x), dtype=float)
    phi = legendre_table(degree, nodes)
    return (values * weights) @ phi.T / legendre_norms(degree)


def evaluate(coeffs: np.ndarray, s) -> np.ndarray:
    """Evaluate per-cell modal coefficients at reference points ``s``."""
    coeffs = np.asarray(coeffs, dtype=float)
    return coeffs @ legendre_table(coeffs.shape[-1] - 1, s)
