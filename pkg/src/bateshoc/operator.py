"""Spatial discretisation of the transformed Bates differential operator.

Writing the PDE part as ``a (u_xx + u_yy) + c u_xy + d u_x + e u_y = f`` with
``f = u_tau - J(u)``, both schemes produce a semi-discrete system

    mass @ (u_tau - J) = stiff @ u

on the PDE rows, plus algebraic rows for the boundary conditions.  For the
central scheme ``mass`` is the identity.  The compact scheme divides by ``a``,
giving ``u_xx + u_yy + C u_xy + D u_x + E u_y = F``, and removes the O(h^2)
truncation error by differentiating the equation itself, so the third and
fourth derivatives in the error are replaced with compact 3x3 differences and
derivatives of ``F``.  Rows are multiplied back by ``a`` afterwards.

Unknowns are ordered y-fastest: ``index = i * (M + 1) + j``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Grid
from .model import BatesParams, ConfigError, xi_b

__all__ = [
    "SchemeKind",
    "OperatorMatrices",
    "assemble",
    "boundary_closure",
    "stencil_table",
    "pde_coefficients",
    "dump_coo",
]


class SchemeKind(str, enum.Enum):
    CENTRAL2 = "central2"
    HOC4 = "hoc4"

    @property
    def order(self) -> int:
        return 4 if self is SchemeKind.HOC4 else 2

    @classmethod
    def parse(cls, value) -> "SchemeKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"unknown scheme {value!r}; expected 'hoc4' or 'central2'") from None


# one-sided first-derivative weights at the lower edge (times 1/h)
_NEUMANN = {
    SchemeKind.CENTRAL2: np.array([-3.0, 4.0, -1.0]) / 2.0,
    SchemeKind.HOC4: np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
}


def pde_coefficients(params: BatesParams, y):
    """Coefficients ``a, c, d, e`` of the transformed operator at ``y``."""
    v = params.sigma_v
    y = np.asarray(y, dtype=float)
    a = 0.5 * v * y
    c = params.rho * v * y
    d = -(0.5 * v * y - params.r + params.lam * xi_b(params))
    e = params.kappa * (params.theta - v * y) / v
    return a, c, d, e


def _normalised_coefficients(params: BatesParams, y):
    """``C, D, E`` after division by ``a`` and the y-derivatives of ``D`` and ``E``."""
    v = params.sigma_v
    mu = params.r - params.lam * xi_b(params)
    kt = params.kappa * params.theta
    C = 2.0 * params.rho * np.ones_like(y)
    D = -1.0 + 2.0 * mu / (v * y)
    D1 = -2.0 * mu / (v * y**2)
    D2 = 4.0 * mu / (v * y**3)
    E = 2.0 * kt / (v * v * y) - 2.0 * params.kappa / v
    E1 = -2.0 * kt / (v * v * y**2)
    E2 = 4.0 * kt / (v * v * y**3)
    return C, D, D1, D2, E, E1, E2


def _basis(h: float):
    """3x3 stencils (axis 0 = x offset, axis 1 = y offset) of the compact differences."""
    one = np.array([0.0, 1.0, 0.0])
    d1 = np.array([-1.0, 0.0, 1.0]) / (2.0 * h)
    d2 = np.array([1.0, -2.0, 1.0]) / (h * h)
    o = np.outer
    return {
        "I": o(one, one),
        "x": o(d1, one),
        "y": o(one, d1),
        "xx": o(d2, one),
        "yy": o(one, d2),
        "xy": o(d1, d1),
        "xxy": o(d2, d1),
        "xyy": o(d1, d2),
        "xxyy": o(d2, d2),
    }


def stencil_table(scheme: SchemeKind, params: BatesParams, grid: Grid):
    """Per-row 3x3 stencils ``(stiff, mass)`` for every y-node, shape (M+1, 3, 3).

    ``mass[j]`` acts on ``f / a`` sampled at the neighbouring nodes; callers
    weight its columns with ``1 / a`` (see :func:`assemble`).
    """
    scheme = SchemeKind.parse(scheme)
    y = grid.y
    if np.any(y <= 0):
        raise ConfigError("y-grid touches 0: diffusion degenerates, require L2 > 0")
    h = grid.h
    B = _basis(h)
    a, c, d, e = pde_coefficients(params, y)
    ny = y.size

    def comb(terms):
        out = np.zeros((ny, 3, 3))
        for coef, key in terms:
            out += np.asarray(coef, dtype=float).reshape(-1, 1, 1) * B[key]
        return out

    if scheme is SchemeKind.CENTRAL2:
        stiff = comb([(a, "xx"), (a, "yy"), (c, "xy"), (d, "x"), (e, "y")])
        mass = comb([(a, "I")])  # a * (f / a) = f
        return stiff, mass

    C, D, D1, D2, E, E1, E2 = _normalised_coefficients(params, y)
    w = h * h / 12.0
    stiff = comb(
        [
            (1.0 + w * (C * D1 + D * D), "xx"),
            (1.0 + w * (E * E + 2.0 * E1), "yy"),
            (C + w * (C * E1 + 2.0 * D * E + 2.0 * D1), "xy"),
            (D + w * (E * D1 + D2), "x"),
            (E + w * (E * E1 + E2), "y"),
            (w * (C * C + 2.0), "xxyy"),
            (w * 2.0 * (C * D + E), "xxy"),
            (w * 2.0 * (C * E + D), "xyy"),
        ]
    )
    mass = comb([(1.0, "I"), (w, "xx"), (w, "yy"), (w * C, "xy"), (w * D, "x"), (w * E, "y")])
    # multiply rows back by a so both schemes share the scaling of the PDE
    return stiff * a[:, None, None], mass * a[:, None, None]


@dataclass(frozen=True, eq=False)
class OperatorMatrices:
    """Sparse semi-discrete operator for one scheme on one grid.

    ``stiff`` and ``mass`` hold the PDE rows; on boundary rows ``mass`` is zero
    and ``stiff`` holds the boundary stencil.  ``impl``/``expl`` are the
    Crank-Nicolson matrices for the grid's time step ``k``::

        impl @ u[n+1] = expl @ u[n] + k * mass @ J_extrap + bvals
    """

    scheme: SchemeKind
    grid: Grid
    stiff: sp.csr_matrix
    mass: sp.csr_matrix
    impl: sp.csr_matrix
    expl: sp.csr_matrix
    pde_rows: np.ndarray  # bool mask over unknowns
    bvals: np.ndarray  # right-hand side of the boundary rows

    @property
    def bandwidth(self) -> int:
        m = self.impl.tocoo()
        return int(np.max(np.abs(m.row - m.col))) if m.nnz else 0

    def residual(self, u, f=None):
        """``stiff @ u - mass @ f`` on the PDE rows (zero elsewhere)."""
        u = np.asarray(u, dtype=float).ravel()
        r = self.stiff @ u
        if f is not None:
            r = r - self.mass @ np.asarray(f, dtype=float).ravel()
        return np.where(self.pde_rows, r, 0.0).reshape(self.grid.shape)


def boundary_closure(scheme: SchemeKind, grid: Grid, tau: float = 0.0):
    """Boundary rows: Dirichlet ``u = 1`` / ``u = 0`` at ``x = -R1`` / ``x = R1`` and
    one-sided ``u_y = 0`` at both y-edges (order matched to the scheme).

    Returns ``(rows, cols, vals, bvals, pde_mask)``; ``tau`` is accepted for a
    time-dependent far field but the limits used here are constant.
    """
    scheme = SchemeKind.parse(scheme)
    nx, ny = grid.shape
    idx = np.arange(grid.size).reshape(nx, ny)
    pde = np.zeros((nx, ny), dtype=bool)
    pde[1:-1, 1:-1] = True
    bvals = np.zeros((nx, ny))
    bvals[0, :] = 1.0

    rows, cols, vals = [], [], []
    # Dirichlet columns (corners included)
    for i in (0, nx - 1):
        rows.append(idx[i, :])
        cols.append(idx[i, :])
        vals.append(np.ones(ny))
    w = _NEUMANN[scheme]
    if ny < w.size:
        raise ConfigError(f"need at least {w.size} y-nodes for the {scheme.value} boundary rows")
    inner = idx[1:-1, :]
    for off, wk in enumerate(w):
        rows.append(inner[:, 0])
        cols.append(inner[:, off])
        vals.append(np.full(nx - 2, wk))
        rows.append(inner[:, -1])
        cols.append(inner[:, -1 - off])
        vals.append(np.full(nx - 2, -wk))
    return (
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(vals),
        bvals.ravel(),
        pde.ravel(),
    )


def assemble(scheme, params: BatesParams, grid: Grid) -> OperatorMatrices:
    scheme = SchemeKind.parse(scheme)
    nx, ny = grid.shape
    stiff_st, mass_st = stencil_table(scheme, params, grid)
    a = pde_coefficients(params, grid.y)[0]
    idx = np.arange(grid.size).reshape(nx, ny)

    ii, jj = np.meshgrid(np.arange(1, nx - 1), np.arange(1, ny - 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    rows, cols, kv, mv = [], [], [], []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ks = stiff_st[jj, di + 1, dj + 1]
            ms = mass_st[jj, di + 1, dj + 1] / a[jj + dj]
            rows.append(idx[ii, jj])
            cols.append(idx[ii + di, jj + dj])
            kv.append(ks)
            mv.append(ms)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    kv = np.concatenate(kv)
    mv = np.concatenate(mv)
    keep_k = kv != 0.0
    keep_m = mv != 0.0

    br, bc, bv, bvals, pde = boundary_closure(scheme, grid)
    n = grid.size
    stiff_pde = sp.csr_matrix((kv[keep_k], (rows[keep_k], cols[keep_k])), shape=(n, n))
    bnd = sp.csr_matrix((bv, (br, bc)), shape=(n, n))
    mass = sp.csr_matrix((mv[keep_m], (rows[keep_m], cols[keep_m])), shape=(n, n))

    half_k = 0.5 * grid.k
    impl = (mass - half_k * stiff_pde + bnd).tocsr()
    expl = (mass + half_k * stiff_pde).tocsr()
    stiff = (stiff_pde + bnd).tocsr()
    for m in (impl, expl, stiff, mass):
        m.sort_indices()
    return OperatorMatrices(
        scheme=scheme,
        grid=grid,
        stiff=stiff,
        mass=mass,
        impl=impl,
        expl=expl,
        pde_rows=pde,
        bvals=bvals,
    )


def dump_coo(matrix, path) -> None:
    """Write ``row col value`` triplets, one per line, for cross-checking."""
    m = sp.coo_matrix(matrix)
    order = np.lexsort((m.col, m.row))
    with open(path, "w") as fh:
        for r, c, v in zip(m.row[order], m.col[order], m.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")
