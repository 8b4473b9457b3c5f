"""Greeks of the solved surface and off-node evaluation.

All Greeks are computed from the per-unit-strike unknown ``u`` and carry the
market scaling for the contract strike ``K``:

    V     = K D u                         D = exp(-(r + lam) tau)
    vega  = K D u_y / sigma_v             (derivative in the variance sigma)
    delta = D u_x / e^x
    gamma = D (u_xx - u_x) / (K e^{2x})
    theta = -dV/dtau = -K D (u_tau - (r + lam) u)

Differences use fourth-order central stencils for compact-scheme surfaces and
second-order ones for the central scheme (the gamma stencil is additionally
fitted to be exact on ``a + b e^x``), trimming 2 (resp. 1) nodes in the
differenced direction so no extrapolation is needed.  ``u_tau`` uses the
backward second-order difference over the last three time levels.

Because ``u`` depends on the strike only through ``x = log(S/K)``, one solve
serves every strike: :meth:`GreekSurface.for_strike` rescales the values and
:func:`evaluate_at` maps ``S`` to ``x`` with the surface's own strike.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .model import BatesParams, ConfigError, ContractSpec, DomainError, discount
from .operator import SchemeKind
from .stepper import SolveReport, Surface

__all__ = [
    "GreekSurface",
    "price_surface",
    "vega",
    "gamma",
    "delta",
    "theta",
    "greek",
    "evaluate_at",
    "write_csv",
    "GREEK_KINDS",
]

GREEK_KINDS = ("price", "vega", "gamma", "delta", "theta")
# power of K in each Greek's market scaling
_K_POWER = {"price": 1, "vega": 1, "gamma": -1, "delta": 0, "theta": 1}

_D1 = {2: np.array([-1.0, 0.0, 1.0]) / 2.0, 4: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0}
_D2 = {2: np.array([1.0, -2.0, 1.0]), 4: np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0}


@dataclass(frozen=True, eq=False)
class GreekSurface:
    """Greek values on the (trimmed) node set ``x`` by ``y``.

    ``x`` is log-moneyness relative to ``K`` and ``y = sigma / sigma_v``.
    """

    kind: str
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # shape (x.size, y.size)
    scheme: SchemeKind | None
    tau: float
    K: float
    h: float
    sigma_v: float
    paper_literal: bool = False

    @property
    def S(self) -> np.ndarray:
        return self.K * np.exp(self.x)

    @property
    def sigma(self) -> np.ndarray:
        return self.sigma_v * self.y

    def for_strike(self, K: float) -> "GreekSurface":
        """Same surface for a contract with strike ``K`` (moneyness nodes unchanged)."""
        if not K > 0:
            raise ConfigError(f"strike K must be > 0, got {K}")
        scale = (K / self.K) ** _K_POWER[self.kind]
        return replace(self, values=self.values * scale, K=float(K))


def _order(surface: Surface, order: int | None) -> int:
    if order is not None:
        if order not in (2, 4):
            raise ConfigError(f"stencil order must be 2 or 4, got {order}")
        return order
    return SchemeKind.parse(surface.scheme).order if surface.scheme is not None else 4


def _diff(u: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    """Apply a centred, zero-sum stencil along ``axis``; the result loses ``len//2`` nodes per side.

    Terms are summed as ``w_s (u_s - u_0)`` so constants give exactly zero.
    """
    n = u.shape[axis]
    w = weights.size
    if n < w:
        raise ConfigError(f"need at least {w} nodes along axis {axis}, have {n}")

    def shifted(s):
        sl = [slice(None)] * u.ndim
        sl[axis] = slice(s, n - w + 1 + s)
        return u[tuple(sl)]

    c = w // 2
    mid = shifted(c)
    out = np.zeros_like(mid)
    for s, ws in enumerate(weights):
        if s != c and ws != 0.0:
            out += ws * (shifted(s) - mid)
    return out


def _gamma_weights(p: int, h: float) -> np.ndarray:
    """Stencil for ``u_xx - u_x`` (already divided by ``h^2``).

    The plain ``D2 - h D1`` combination leaves an ``O(h^p)`` residual on
    ``e^x``; an ``O(h^p)`` multiple of the p-th undivided difference removes
    it, so surfaces linear in ``S`` get exactly zero gamma and the order is kept.
    """
    base = _D2[p] - h * _D1[p]
    t = p // 2
    s = np.arange(-t, t + 1)
    e = np.exp(s * h)
    resid = base @ e  # exact result for e^x is 0
    even = np.array([1.0, -2.0, 1.0]) if p == 2 else np.array([1.0, -4.0, 6.0, -4.0, 1.0])
    return (base - resid / (2.0 * math.sinh(h / 2.0)) ** p * even) / h**2


def _make(kind, surface: Surface, x, y, values, params, contract, order, literal=False):
    g = surface.grid
    return GreekSurface(
        kind=kind,
        x=np.asarray(x, dtype=float),
        y=np.asarray(y, dtype=float),
        values=np.asarray(values, dtype=float),
        scheme=surface.scheme,
        tau=float(surface.tau),
        K=float(contract.K),
        h=float(g.h),
        sigma_v=float(params.sigma_v),
        paper_literal=literal,
    )


def price_surface(surface: Surface, params: BatesParams, contract: ContractSpec) -> GreekSurface:
    """Option values ``V = K D u`` on the full grid."""
    g = surface.grid
    V = contract.K * discount(surface.tau, params) * surface.values
    return _make("price", surface, g.x, g.y, V, params, contract, None)


def vega(surface: Surface, params: BatesParams, contract: ContractSpec, *, order: int | None = None,
         paper_literal: bool = False) -> GreekSurface:
    """``dV/dsigma`` by central differences in ``y``.

    ``paper_literal`` instead differences in ``x`` and divides by ``sigma_j``,
    reproducing the formula as printed in the source (kept for comparison).
    """
    p = _order(surface, order)
    g = surface.grid
    t = p // 2
    scale = contract.K * float(discount(surface.tau, params))
    u = surface.values
    if paper_literal:
        vals = _diff(u, _D1[p], 0) / g.h * scale / (params.sigma_v * g.y[None, :])
        return _make("vega", surface, g.x[t:-t], g.y, vals, params, contract, p, True)
    vals = _diff(u, _D1[p], 1) / g.h * scale / params.sigma_v
    return _make("vega", surface, g.x, g.y[t:-t], vals, params, contract, p)


def gamma(surface: Surface, params: BatesParams, contract: ContractSpec, *, order: int | None = None,
          paper_literal: bool = False) -> GreekSurface:
    """``d2V/dS2 = D (u_xx - u_x) / (K e^{2x})``.

    ``paper_literal`` uses the printed sign pattern ``(1, -16, 30, -16, 1)``
    with prefactor ``1/S^2`` and no ``-u_x`` term.
    """
    p = _order(surface, order)
    g = surface.grid
    t = p // 2
    disc = float(discount(surface.tau, params))
    u = surface.values
    xs = g.x[t:-t]
    if paper_literal:
        d2 = -_diff(u, _D2[p], 0) / g.h**2
        S = contract.K * np.exp(xs)
        vals = contract.K * disc * d2 / (S * S)[:, None]
        return _make("gamma", surface, xs, g.y, vals, params, contract, p, True)
    vals = disc * _diff(u, _gamma_weights(p, g.h), 0) / (contract.K * np.exp(2.0 * xs))[:, None]
    return _make("gamma", surface, xs, g.y, vals, params, contract, p)


def delta(surface: Surface, params: BatesParams, contract: ContractSpec, *, order: int | None = None,
          paper_literal: bool = False) -> GreekSurface:
    """``dV/dS = D u_x / e^x``."""
    p = _order(surface, order)
    g = surface.grid
    t = p // 2
    xs = g.x[t:-t]
    disc = float(discount(surface.tau, params))
    vals = disc * (_diff(surface.values, _D1[p], 0) / g.h) / np.exp(xs)[:, None]
    return _make("delta", surface, xs, g.y, vals, params, contract, p)


def theta(run: SolveReport | list, params: BatesParams, contract: ContractSpec, **_) -> GreekSurface:
    """``dV/dt`` at the final level from the last three retained levels.

    Uses the product rule on ``V = K D u`` so that a frozen ``u`` gives
    exactly ``(r + lam) V``; ``u_tau`` is the backward second-order difference.
    """
    history = run.history if isinstance(run, SolveReport) else list(run)
    if len(history) < 3:
        raise ConfigError("theta needs the last three time levels; the run kept fewer")
    u0, u1, u2 = (s.values for s in history[-3:])
    last = history[-1]
    k = last.grid.k
    if not (history[-2].n == last.n - 1 and history[-3].n == last.n - 2):
        raise ConfigError("theta needs three consecutive time levels")
    u_tau = (3.0 * u2 - 4.0 * u1 + u0) / (2.0 * k)
    disc = float(discount(last.tau, params))
    vals = -contract.K * disc * (u_tau - (params.r + params.lam) * u2)
    g = last.grid
    return _make("theta", last, g.x, g.y, vals, params, contract, None)


def greek(kind: str, run: SolveReport, params: BatesParams, contract: ContractSpec, **kw) -> GreekSurface:
    """Dispatch by name; ``run`` is a :class:`SolveReport`."""
    if kind == "price":
        return price_surface(run.surface, params, contract)
    if kind == "theta":
        return theta(run, params, contract)
    funcs = {"vega": vega, "gamma": gamma, "delta": delta}
    if kind not in funcs:
        raise ConfigError(f"unknown quantity {kind!r}; expected one of {GREEK_KINDS}")
    return funcs[kind](run.surface, params, contract, **kw)


def _lagrange_weights(nodes: np.ndarray, q: float, h: float) -> np.ndarray:
    w = np.ones(nodes.size)
    for s in range(nodes.size):
        for o in range(nodes.size):
            if o != s:
                w[s] *= (q - nodes[o]) / (nodes[s] - nodes[o])
    return w


def _axis_weights(nodes: np.ndarray, q: float, h: float, name: str):
    n = nodes.size
    tol = 1e-9 * h
    if n < 4:
        raise ConfigError(f"need at least 4 nodes in {name} to interpolate, have {n}")
    if q < nodes[0] - tol or q > nodes[-1] + tol:
        raise DomainError(
            f"{name}={q:.6g} lies outside the trimmed domain [{nodes[0]:.6g}, {nodes[-1]:.6g}]"
        )
    pos = (q - nodes[0]) / h
    near = int(round(pos))
    if abs(pos - near) * h <= tol:
        # on a node: cardinal property, return that value exactly
        return np.array([near]), np.array([1.0])
    cell = min(max(int(math.floor(pos)), 0), n - 2)
    first = min(max(cell - 1, 0), n - 4)
    idx = np.arange(first, first + 4)
    return idx, _lagrange_weights(nodes[idx], q, h)


def evaluate_at(gs: GreekSurface, S: float, sigma: float) -> float:
    """4x4-node Lagrange interpolation of ``gs`` at spot ``S`` and variance ``sigma``."""
    if not (S > 0 and sigma > 0):
        raise DomainError(f"need S > 0 and sigma > 0, got S={S}, sigma={sigma}")
    x = math.log(S / gs.K)
    y = sigma / gs.sigma_v
    ix, wx = _axis_weights(gs.x, x, gs.h, "x=log(S/K)")
    iy, wy = _axis_weights(gs.y, y, gs.h, "y=sigma/sigma_v")
    block = gs.values[np.ix_(ix, iy)]
    return float(wx @ block @ wy)


def write_csv(gs: GreekSurface, path) -> None:
    """One row per node: ``x, y, S, sigma, value`` with 17 significant digits."""
    S = gs.S
    sig = gs.sigma
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "S", "sigma", gs.kind])
        for i in range(gs.x.size):
            for j in range(gs.y.size):
                w.writerow([f"{v:.17g}" for v in (gs.x[i], gs.y[j], S[i], sig[j], gs.values[i, j])])
