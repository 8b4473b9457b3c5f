"""Crank-Nicolson / Adams-Bashforth time stepping of the semi-discrete PIDE.

The differential part is treated with Crank-Nicolson, the jump integral with
the two-step Adams-Bashforth extrapolation ``3/2 J(u^n) - 1/2 J(u^{n-1})``.
The first step uses the single explicit value ``J(u^0)``.  The implicit matrix
does not change between steps, so it is factorised once per run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .jump import JumpOperator, apply_jump, build_jump_operator
from .linalg import LUFactors, lu_factorize
from .model import BatesParams, ContractSpec, ConfigError, put_payoff_transformed, smoothed_payoff
from .operator import OperatorMatrices, SchemeKind, assemble

__all__ = ["Surface", "SolveReport", "NumericalError", "step", "solve_pide", "initial_surface"]


class NumericalError(ArithmeticError):
    """Non-finite values appeared during time stepping."""


@dataclass(frozen=True, eq=False)
class Surface:
    """Solver unknown ``u[i, j]`` at ``x_i``, ``y_j`` and time level ``n``."""

    values: np.ndarray
    grid: Grid
    n: int
    scheme: SchemeKind | None = None

    @property
    def tau(self) -> float:
        return self.n * self.grid.k


@dataclass(eq=False)
class SolveReport:
    surface: Surface
    factor_count: int
    solve_count: int
    wall_time: float
    scheme: SchemeKind
    n_steps: int
    history: list = field(default_factory=list)  # last three levels, oldest first

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "h": self.surface.grid.h,
            "k": self.surface.grid.k,
            "n_steps": self.n_steps,
            "factor_count": self.factor_count,
            "solve_count": self.solve_count,
            "wall_time": self.wall_time,
        }


def initial_surface(grid: Grid, scheme=None, smoothing: str = "kreiss") -> Surface:
    if smoothing == "kreiss":
        payoff = smoothed_payoff(grid.x, grid.h)
    elif smoothing == "none":
        payoff = put_payoff_transformed(grid.x)
    else:
        raise ConfigError(f"unknown payoff smoothing {smoothing!r}")
    u0 = np.repeat(payoff[:, None], grid.M + 1, axis=1)
    # far-field values on the Dirichlet columns
    u0[0, :] = 1.0
    u0[-1, :] = 0.0
    return Surface(u0, grid, 0, scheme)


def _check(u: np.ndarray, n: int) -> None:
    if not np.all(np.isfinite(u)):
        raise NumericalError(f"non-finite values at time level {n}")


def step(u_n: Surface, u_nm1: Surface | None, mats: OperatorMatrices, jop: JumpOperator, lu: LUFactors,
         j_n=None, j_nm1=None) -> Surface:
    """Advance one level.  ``u_nm1=None`` selects the first-order bootstrap step.

    ``j_n``/``j_nm1`` are cached jump evaluations; they are computed when absent.
    """
    grid = mats.grid
    k = grid.k
    if j_n is None:
        j_n = apply_jump(jop, u_n.values, grid)
    if u_nm1 is None:
        jx = j_n
    else:
        if j_nm1 is None:
            j_nm1 = apply_jump(jop, u_nm1.values, grid)
        jx = 1.5 * j_n - 0.5 * j_nm1
    un = u_n.values.ravel()
    rhs = mats.expl @ un + k * (mats.mass @ jx.ravel()) + mats.bvals
    new = lu.solve(rhs)
    # Dirichlet rows exactly
    new = new.reshape(grid.shape)
    new[0, :] = 1.0
    new[-1, :] = 0.0
    _check(new, u_n.n + 1)
    return Surface(new, grid, u_n.n + 1, mats.scheme)


def solve_pide(params: BatesParams, contract: ContractSpec, grid: Grid, scheme="hoc4", *,
               jump_tol: float = 1e-10, lu_backend: str = "superlu", keep_history: int = 3,
               smoothing: str = "kreiss") -> SolveReport:
    """Solve from the payoff at ``tau = 0`` to ``tau = T`` on ``grid``."""
    scheme = SchemeKind.parse(scheme)
    if abs(grid.T - contract.T) > 1e-12:
        raise ConfigError(f"grid horizon T={grid.T} differs from the contract expiry T={contract.T}")
    t0 = time.perf_counter()
    mats = assemble(scheme, params, grid)
    jop = build_jump_operator(params, grid, jump_tol)
    lu = lu_factorize(mats.impl, backend=lu_backend, node_of=grid.node_of, check_rows=mats.pde_rows)

    u = initial_surface(grid, scheme, smoothing)
    history = [u]
    prev = None
    j_prev = None
    j_cur = apply_jump(jop, u.values, grid)
    for _ in range(grid.n_steps):
        nxt = step(u, prev, mats, jop, lu, j_n=j_cur, j_nm1=j_prev)
        prev, u = u, nxt
        j_prev, j_cur = j_cur, apply_jump(jop, u.values, grid)
        history.append(u)
        if len(history) > keep_history:
            history.pop(0)
    return SolveReport(
        surface=u,
        factor_count=lu.factor_count,
        solve_count=lu.solve_count,
        wall_time=time.perf_counter() - t0,
        scheme=scheme,
        n_steps=grid.n_steps,
        history=history,
    )
