"""One-time LU factorisation and repeated solves.

Two backends share the :class:`LUFactors` interface:

``"banded"``
    Doolittle elimination without pivoting in dense band storage; fill stays
    inside the band.  Compiled with numba.
``"superlu"``
    SuperLU with a fill-reducing column ordering (scipy).  Faster on the
    reference grid, where the band is ~160 wide but the true fill is far
    smaller.

Either way the matrix is factorised exactly once; ``solve`` only performs the
triangular sweeps (plus one refinement step when the residual is poor).
"""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numba import njit

__all__ = ["SingularMatrixError", "LUFactors", "lu_factorize", "solve", "bandwidth", "dominance_margin"]

log = logging.getLogger(__name__)

_PIVOT_TOL = 1e-14
_REFINE_TOL = 1e-11


class SingularMatrixError(ArithmeticError):
    """Zero or near-zero pivot during elimination."""


def bandwidth(m) -> int:
    m = sp.coo_matrix(m)
    return int(np.max(np.abs(m.row - m.col))) if m.nnz else 0


def dominance_margin(m, rows=None) -> float:
    """Smallest ``(|a_ii| - sum_j!=i |a_ij|) / |a_ii|`` over ``rows``."""
    m = sp.csr_matrix(m)
    diag = np.abs(m.diagonal())
    off = np.asarray(abs(m).sum(axis=1)).ravel() - diag
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = (diag - off) / diag
    if rows is not None:
        margin = margin[rows]
    return float(np.min(margin)) if margin.size else 1.0


def _to_band(m: sp.csr_matrix, bw: int) -> np.ndarray:
    coo = m.tocoo()
    ab = np.zeros((m.shape[0], 2 * bw + 1))
    ab[coo.row, bw + coo.col - coo.row] = coo.data
    return ab


@njit(cache=True)
def _band_factor(ab, bw, row_scale, tol):
    # ab[i, bw + (j - i)] = A[i, j]; overwritten by L (unit, strict lower) and U
    n = ab.shape[0]
    for k in range(n):
        piv = ab[k, bw]
        if abs(piv) <= tol * row_scale[k]:
            return k
        last = min(bw, n - 1 - k)
        for i in range(k + 1, k + last + 1):
            off = bw + k - i
            lik = ab[i, off]
            if lik == 0.0:
                continue
            lik /= piv
            ab[i, off] = lik
            for j in range(1, last + 1):
                ab[i, off + j] -= lik * ab[k, bw + j]
    return -1


@njit(cache=True)
def _band_solve(ab, bw, b):
    n = ab.shape[0]
    x = b.copy()
    for i in range(n):
        s = x[i]
        for j in range(max(0, i - bw), i):
            s -= ab[i, bw + j - i] * x[j]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, min(n - 1, i + bw) + 1):
            s -= ab[i, bw + j - i] * x[j]
        x[i] = s / ab[i, bw]
    return x


class LUFactors:
    """Factorised square matrix with solve telemetry.

    ``factor_count`` is fixed at 1; ``solve_count`` counts right-hand sides.
    """

    def __init__(self, matrix, backend: str = "superlu", node_of=None):
        m = sp.csr_matrix(matrix, dtype=float)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got {m.shape}")
        self.matrix = m
        self.n = m.shape[0]
        self.backend = backend
        self.bandwidth = bandwidth(m)
        self.solve_count = 0
        self.refine_count = 0
        row_scale = np.asarray(abs(m).max(axis=1).todense()).ravel()
        if backend == "banded":
            ab = _to_band(m, self.bandwidth)
            bad = _band_factor(ab, self.bandwidth, row_scale, _PIVOT_TOL)
            if bad >= 0:
                where = f" at grid node {node_of(bad)}" if node_of else ""
                raise SingularMatrixError(f"zero pivot in row {bad}{where}")
            self._band = ab
        elif backend == "superlu":
            empty = np.flatnonzero(row_scale == 0.0)
            if empty.size:
                where = f" at grid node {node_of(empty[0])}" if node_of else ""
                raise SingularMatrixError(f"zero pivot in row {empty[0]}{where}")
            try:
                self._lu = spla.splu(m.tocsc())
            except RuntimeError as exc:  # "Factor is exactly singular"
                raise SingularMatrixError(str(exc)) from None
            udiag = np.abs(self._lu.U.diagonal())
            # Pr A Pc = L U: U row k is row argsort(perm_r)[k] of the input
            rows = np.argsort(self._lu.perm_r)
            small = np.flatnonzero(udiag <= _PIVOT_TOL * row_scale[rows])
            if small.size:
                col = int(np.argsort(self._lu.perm_c)[small[0]])
                where = f" at grid node {node_of(col)}" if node_of else ""
                raise SingularMatrixError(f"near-zero pivot for unknown {col}{where}")
        else:
            raise ValueError(f"unknown LU backend {backend!r}")
        self.factor_count = 1

    def _sweep(self, rhs):
        if self.backend == "banded":
            return _band_solve(self._band, self.bandwidth, rhs)
        return self._lu.solve(rhs)

    def solve(self, rhs) -> np.ndarray:
        rhs = np.ascontiguousarray(rhs, dtype=float)
        if rhs.shape != (self.n,):
            raise ValueError(f"right-hand side has shape {rhs.shape}, expected ({self.n},)")
        self.solve_count += 1
        x = self._sweep(rhs)
        res = rhs - self.matrix @ x
        scale = np.max(np.abs(rhs))
        if scale > 0 and np.max(np.abs(res)) > _REFINE_TOL * scale:
            x += self._sweep(res)
            self.refine_count += 1
        return x


def lu_factorize(m, backend: str = "superlu", node_of=None, check_rows=None) -> LUFactors:
    """Factorise ``m`` once.  ``check_rows`` selects rows for the dominance warning."""
    margin = dominance_margin(m, check_rows)
    if margin < 0.1:
        # only the unpivoted banded elimination relies on dominance
        level = logging.WARNING if backend == "banded" else logging.DEBUG
        log.log(level, "implicit matrix diagonal dominance margin %.3g is below 10%%", margin)
    return LUFactors(m, backend=backend, node_of=node_of)


def solve(f: LUFactors, rhs) -> np.ndarray:
    return f.solve(rhs)
