"""The nonlocal jump term ``lam * int u(x + z, y) p(z) dz`` on the x-lattice.

Offsets ``z`` run over a window of the grid lattice around the jump mean.  On
each lattice cell the solution is replaced by the cubic through the four
surrounding grid values, and that cubic is integrated exactly against the
Gaussian density (Gauss-Legendre on the cell).  This keeps the quadrature
fourth order even when the density is narrower than the mesh.  Mass falling
outside the grid takes the far-field values: 1 on the left, 0 on the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import ndtr, ndtri

from .grid import Grid
from .model import BatesParams, ConfigError, jump_density_z

__all__ = ["JumpOperator", "build_jump_operator", "apply_jump"]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True, eq=False)
class JumpOperator:
    """Precomputed quadrature for the jump integral on one grid.

    ``offsets``/``weights`` are the lattice offsets ``z_m`` and their weights
    for a node far from the x-boundaries; ``left_tail``/``right_tail`` are the
    Gaussian masses outside the window.  ``matrix`` and ``far_left`` hold the
    boundary-corrected weights for every x-node.
    """

    lam: float
    window: tuple[float, float]
    offsets: np.ndarray
    weights: np.ndarray
    left_tail: float
    right_tail: float
    matrix: sp.csr_matrix  # (nx, nx)
    far_left: np.ndarray  # mass landing left of -R1 (or left of the window), per x-node
    far_right: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum() + self.left_tail + self.right_tail)


def _cell_weights(z0: float, h: float, params: BatesParams, shift: int) -> np.ndarray:
    """Integrals of the 4 Lagrange cardinals (nodes at ``z0 + (s-1+shift) h``,
    s=0..3) times the density over the cell ``[z0, z0 + h]``."""
    t = 0.5 * (_GL_NODES + 1.0)  # cell-local coordinate in [0, 1]
    dens = jump_density_z(z0 + t * h, params) * (0.5 * h * _GL_WEIGHTS)
    nodes = np.arange(4) - 1 + shift
    out = np.empty(4)
    for s in range(4):
        others = np.delete(nodes, s)
        ell = np.prod([(t - o) / (nodes[s] - o) for o in others], axis=0)
        out[s] = ell @ dens
    return out


def build_jump_operator(params: BatesParams, grid: Grid, tol: float = 1e-10) -> JumpOperator:
    if not 0 < tol < 1:
        raise ConfigError(f"jump_tol must lie in (0, 1), got {tol}")
    h = grid.h
    nx = grid.x.size
    g, dj = params.gamma_j, params.delta_j
    w = float(ndtri(1.0 - 0.5 * tol))
    m_lo = math.floor((g - w * dj) / h + 1e-9)
    m_hi = math.ceil((g + w * dj) / h - 1e-9)
    if m_hi == m_lo:
        m_hi += 1
    if (m_hi - m_lo) % 2:
        # odd interval count: extend on the side closer to the mean
        if (g - m_lo * h) < (m_hi * h - g):
            m_lo -= 1
        else:
            m_hi += 1
    z_lo, z_hi = m_lo * h, m_hi * h
    if z_hi - z_lo > 2 * grid.spec.R1:
        raise ConfigError(
            f"jump window [{z_lo:.3g}, {z_hi:.3g}] is wider than the x-domain; "
            "increase R1 or loosen jump_tol"
        )
    left_tail = float(ndtr((z_lo - g) / dj))
    right_tail = float(ndtr(-(z_hi - g) / dj))

    cells = {m: _cell_weights(m * h, h, params, 0) for m in range(m_lo, m_hi)}
    offsets = np.arange(m_lo - 1, m_hi + 2)
    weights = np.zeros(offsets.size)
    for m, cw in cells.items():
        weights[m - 1 - offsets[0] : m + 3 - offsets[0]] += cw

    rows, cols, vals = [], [], []
    far_left = np.full(nx, left_tail)
    far_right = np.full(nx, right_tail)
    for i in range(nx):
        for m in range(m_lo, m_hi):
            lo = i + m  # left node of the cell
            if lo < 0:
                far_left[i] += float(ndtr((m + 1) * h / dj - g / dj) - ndtr(m * h / dj - g / dj))
                continue
            if lo + 1 > nx - 1:
                far_right[i] += float(ndtr((m + 1) * h / dj - g / dj) - ndtr(m * h / dj - g / dj))
                continue
            shift = 0
            if lo - 1 < 0:
                shift = 1
            elif lo + 2 > nx - 1:
                shift = -1
            cw = cells[m] if shift == 0 else _cell_weights(m * h, h, params, shift)
            first = lo - 1 + shift
            rows.extend([i] * 4)
            cols.extend(range(first, first + 4))
            vals.extend(cw)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(nx, nx))
    matrix.sum_duplicates()
    return JumpOperator(
        lam=params.lam,
        window=(z_lo, z_hi),
        offsets=offsets * h,
        weights=weights,
        left_tail=left_tail,
        right_tail=right_tail,
        matrix=matrix,
        far_left=far_left,
        far_right=far_right,
    )


def apply_jump(op: JumpOperator, u, grid: Grid | None = None, right_value: float = 0.0) -> np.ndarray:
    """``lam * int u(x + z, y) p(z) dz`` for a surface of shape (nx, ny).

    ``right_value`` replaces the right far-field value 0 (test hook).
    """
    u = np.asarray(u, dtype=float)
    if op.lam == 0.0:
        return np.zeros_like(u)
    out = op.matrix @ u
    out += op.far_left[:, None]
    if right_value:
        out += right_value * op.far_right[:, None]
    return op.lam * out
