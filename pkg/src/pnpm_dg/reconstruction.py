"""Reconstruction of degree-M polynomials on the three-cell central stencil.

On the reference stencil the left, central and right cells are
``(-3, -1)``, ``(-1, 1)`` and ``(1, 3)``.  The reconstruction
``w(s) = sum_k w_hat[k] P_k(s)`` has to reproduce the degree-N moments of
the data in every stencil cell::

    int_{cell j} w P_l^{(j)} ds = int_{cell j} u^{(j)} P_l^{(j)} ds,
    l = 0..N, j in {left, centre, right}.

The central-cell equations are imposed exactly (they simply say
``w_hat[:N+1] = u_hat_centre``); the remaining ``2(N+1)`` neighbour
equations are solved in the least-squares sense with equal weights, which
is an exact solve when ``M = 3N + 2``.

The operator matrices are assembled in exact rational arithmetic and only
rounded to floats at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from pnpm_dg.basis import PERIODIC, Grid

# reference offsets of the left, central and right stencil cells
STENCIL_OFFSETS = (-2, 0, 2)
SINGULAR_PIVOT_TOL = 1e-12


class ReconstructionError(RuntimeError):
    pass


def check_degrees(n: int, m: int):
    if n < 0 or not n <= m <= 3 * n + 2:
        raise ValueError(f"need 0 <= N <= M <= 3N+2, got N={n}, M={m}")


# {{{ exact polynomial arithmetic


@lru_cache(maxsize=None)
def _legendre_monomial(k: int) -> tuple[Fraction, ...]:
    """Monomial coefficients of ``P_k``, lowest power first."""
    if k == 0:
        return (Fraction(1),)
    if k == 1:
        return (Fraction(0), Fraction(1))
    p1 = _legendre_monomial(k - 1)
    p0 = _legendre_monomial(k - 2)
    out = [Fraction(0)] * (k + 1)
    for i, c in enumerate(p1):
        out[i + 1] += Fraction(2 * k - 1, k) * c
    for i, c in enumerate(p0):
        out[i] -= Fraction(k - 1, k) * c
    return tuple(out)


@lru_cache(maxsize=None)
def _shifted_legendre(k: int, offset: int) -> tuple[Fraction, ...]:
    """Monomial coefficients of ``s -> P_k(s + offset)``."""
    p = _legendre_monomial(k)
    out = [Fraction(0)] * len(p)
    for j, c in enumerate(p):
        if c == 0:
            continue
        for i in range(j + 1):
            out[i] += c * comb(j, i) * Fraction(offset) ** (j - i)
    return tuple(out)


def _inner(p, q) -> Fraction:
    """``int_{-1}^{1} p(s) q(s) ds`` for monomial coefficient sequences."""
    total = Fraction(0)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            if b != 0 and (i + j) % 2 == 0:
                total += a * b * Fraction(2, i + j + 1)
    return total


@lru_cache(maxsize=None)
def shifted_inner_exact(k: int, l: int, offset: int) -> Fraction:
    """``int_{-1}^{1} P_k(s) P_l(s + offset) ds`` as an exact fraction."""
    return _inner(_legendre_monomial(k), _shifted_legendre(l, offset))


def _solve_exact(a: list[list[Fraction]], b: list[list[Fraction]]) -> list[list[Fraction]]:
    """Gauss-Jordan elimination with partial pivoting on fractions."""
    n = len(a)
    ncols = len(b[0])
    a = [row[:] for row in a]
    b = [row[:] for row in b]
    scale = max((abs(x) for row in a for x in row), default=Fraction(0))
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if scale == 0 or abs(a[piv][col]) <= SINGULAR_PIVOT_TOL * scale:
            raise ReconstructionError(
                f"reconstruction system is singular at pivot {col} "
                f"(|pivot| = {float(abs(a[piv][col])):.3e})")
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        inv = 1 / a[col][col]
        for r in range(n):
            if r == col or a[r][col] == 0:
                continue
            fac = a[r][col] * inv
            a[r] = [x - fac * y for x, y in zip(a[r], a[col])]
            b[r] = [x - fac * y for x, y in zip(b[r], b[col])]
    return [[b[r][c] / a[r][r] for c in range(ncols)] for r in range(n)]


# }}}


# {{{ operator


def _gram_exact(n: int, m: int) -> list[list[Fraction]]:
    rows = []
    for offset in STENCIL_OFFSETS:
        for l in range(n + 1):
            # int over stencil cell of Psi_k * Phi_l, shifted back onto (-1, 1)
            rows.append([shifted_inner_exact(l, k, offset) for k in range(m + 1)])
    return rows


def stencil_gram(n: int, m: int) -> np.ndarray:
    """Inner products ``<Psi_k, Phi_l^{(j)}>`` over the reference stencil.

    Row ``j * (N + 1) + l`` belongs to stencil cell ``j`` (left, centre,
    right) and test degree ``l``; column ``k`` to the reconstruction basis
    function ``P_k`` extended over the stencil.
    """
    check_degrees(n, m)
    return np.array(_gram_exact(n, m), dtype=float)


@lru_cache(maxsize=None)
def _operator_exact(n: int, m: int) -> tuple[tuple[Fraction, ...], ...]:
    check_degrees(n, m)
    nb = n + 1
    gram = _gram_exact(n, m)
    norms = [Fraction(2, 2 * l + 1) for l in range(nb)]

    rows: list[list[Fraction]] = []
    for k in range(nb):
        row = [Fraction(0)] * (3 * nb)
        row[nb + k] = Fraction(1)
        rows.append(row)
    if m == n:
        return tuple(tuple(r) for r in rows)

    side = [r for j in (0, 2) for r in range(j * nb, (j + 1) * nb)]
    g_low = [[gram[r][k] for k in range(nb)] for r in side]
    g_high = [[gram[r][k] for k in range(nb, m + 1)] for r in side]

    # neighbour equations: g_high z = D u_side - g_low u_centre
    rhs = []
    for i, r in enumerate(side):
        row = [Fraction(0)] * (3 * nb)
        row[r] = norms[r % nb]
        for k in range(nb):
            row[nb + k] -= g_low[i][k]
        rhs.append(row)

    n_free = m - n
    # equilibrate columns; entries of P_k(s + 2) grow like 5.8**k
    col_scale = [max(abs(g_high[i][p]) for i in range(len(side))) for p in range(n_free)]
    g_high = [[x / s for x, s in zip(row, col_scale)] for row in g_high]
    if len(side) == n_free:
        z = _solve_exact(g_high, rhs)
    else:
        gt = list(zip(*g_high))
        normal = [[sum(a * b for a, b in zip(gt[p], gt[q])) for q in range(n_free)]
                  for p in range(n_free)]
        gtr = [[sum(gt[p][i] * rhs[i][c] for i in range(len(side)))
                for c in range(3 * nb)] for p in range(n_free)]
        z = _solve_exact(normal, gtr)
    rows.extend([x / s for x in row] for row, s in zip(z, col_scale))
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class ReconOperator:
    """Linear map from stacked stencil coefficients to ``w_hat``.

    ``matrix`` has shape ``(M + 1, 3 (N + 1))`` and acts on
    ``concat(u_hat_left, u_hat_centre, u_hat_right)``.
    """

    n: int
    m: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix.flags.writeable = False

    def apply(self, left, centre, right) -> np.ndarray:
        stacked = np.concatenate([left, centre, right], axis=-1)
        w = stacked @ self.matrix.T
        # the central moments are copied, not recomputed
        w[..., :self.n + 1] = centre
        return w


@lru_cache(maxsize=None)
def build_operator(n: int, m: int) -> ReconOperator:
    matrix = np.array(_operator_exact(n, m), dtype=float)
    return ReconOperator(n, m, matrix)


# }}}


# {{{ fields


@dataclass
class ModalField:
    """Piecewise polynomial ``u_h`` of degree ``n`` on ``grid``."""

    grid: Grid
    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.grid.n_cells, self.n + 1):
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match "
                f"({self.grid.n_cells}, {self.n + 1})")


@dataclass
class ReconField:
    """Piecewise polynomial ``w_h`` of degree ``m`` reconstructed from a ModalField."""

    grid: Grid
    m: int
    coeffs: np.ndarray

    def residual(self, n: int) -> np.ndarray:
        """Coefficients of ``r_h = w_h - u_h``; the first ``n + 1`` vanish."""
        r = self.coeffs.copy()
        r[:, :n + 1] = 0.0
        return r


def pad_cells(coeffs: np.ndarray, boundary: str, width: int) -> np.ndarray:
    """Add ``width`` ghost cells on both sides (wrap-around or constant copy)."""
    if boundary == PERIODIC:
        return np.pad(coeffs, ((width, width), (0, 0)), mode="wrap")
    return np.pad(coeffs, ((width, width), (0, 0)), mode="edge")


def reconstruct_padded(op: ReconOperator, padded: np.ndarray) -> np.ndarray:
    """Reconstruct every cell of ``padded`` that has two neighbours.

    Returns ``len(padded) - 2`` rows of ``w_hat``.
    """
    return op.apply(padded[:-2], padded[1:-1], padded[2:])


def reconstruct(op: ReconOperator, u: ModalField) -> ReconField:
    if op.n != u.n:
        raise ValueError(f"operator degree N={op.n} does not match field degree {u.n}")
    padded = pad_cells(u.coeffs, u.grid.boundary, 1)
    return ReconField(u.grid, op.m, reconstruct_padded(op, padded))


# }}}


# {{{ existence and uniqueness for M = 3N + 2


def appendix_a_coeff(k: int, l: int) -> float:
    """``a_{k,l} = int_{-1}^{1} P_k(s) P_l(s + 2) ds``."""
    if k < 0 or l < 0:
        raise ValueError("degrees must be non-negative")
    return float(shifted_inner_exact(k, l, 2))


def appendix_b_coeff(k: int, l: int) -> float:
    """``b_{k,l} = int_{-1}^{1} P_k(s) P_l(s - 2) ds``, computed directly."""
    return float(shifted_inner_exact(k, l, -2))


def invertibility_matrix(n: int) -> np.ndarray:
    """The square matrix built from ``a_{k,l}`` and ``c_{k,l} = (a + b)/2``.

    Rows are ``a_{k, N+1..3N+2}`` followed by ``c_{k, N+1..3N+2}`` for
    ``k = 0..N``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    cols = range(n + 1, 3 * n + 3)
    a_rows = [[shifted_inner_exact(k, l, 2) for l in cols] for k in range(n + 1)]
    c_rows = [[(1 + (-1) ** (k + l)) * shifted_inner_exact(k, l, 2) / 2 for l in cols]
              for k in range(n + 1)]
    return np.array(a_rows + c_rows, dtype=float)


@dataclass(frozen=True)
class InvertibilityReport:
    n: int
    min_singular_value: float
    condition_number: float


def appendix_a_invertibility(n: int) -> InvertibilityReport:
    sv = np.linalg.svd(invertibility_matrix(n), compute_uv=False)
    return InvertibilityReport(n, float(sv[-1]), float(sv[0] / sv[-1]))


def lemma_spot_check(n: int, l: int, rng: np.random.Generator) -> tuple[float, float]:
    """Build a random degree-n ``Q`` with ``int P_l(s+2) Q = 0`` by projection.

    Returns ``(int P_l(s+2) Q, int P_{l+2}(s+2) Q)``, both normalised by
    the norms of the vectors involved so that they can be compared with
    round-off; the first should vanish and the second should not.
    """
    a_l = np.array([appendix_a_coeff(k, l) for k in range(n + 1)])
    a_l2 = np.array([appendix_a_coeff(k, l + 2) for k in range(n + 1)])
    if n == 0:
        # a_{0,l} != 0, so only Q = 0 satisfies the constraint
        raise ValueError("no non-zero constant Q is orthogonal to P_l(s+2)")
    q = rng.standard_normal(n + 1)
    q -= (q @ a_l) / (a_l @ a_l) * a_l
    q /= np.linalg.norm(q)
    return (q @ a_l) / np.linalg.norm(a_l), (q @ a_l2) / np.linalg.norm(a_l2)


# }}}
