"""Grid-convergence studies: error norms against a fine reference and order fits.

Errors are taken on nodes shared with the reference grid inside a fixed
window, by default the coarsest grid's domain with ``2 h_max`` cut from every
side.  That is the trimmed domain of the widest fourth-order stencil, so
prices and every Greek are compared over the identical point set for all
mesh sizes and both schemes.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import GridSpec, build_grid
from .greeks import GREEK_KINDS, GreekSurface, greek
from .model import BatesParams, ConfigError, ContractSpec
from .operator import SchemeKind
from .stepper import SolveReport, solve_pide

__all__ = [
    "H_REF",
    "STUDY_H_LIST",
    "Window",
    "study_window",
    "error_norms",
    "fit_order",
    "ConvergenceReport",
    "SolveCache",
    "run_convergence_study",
]

H_REF = 0.025
STUDY_H_LIST = (0.4, 0.2, 0.1, 0.05)


@dataclass(frozen=True)
class Window:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def mask(self, x, y):
        tol = 1e-9
        mx = (x >= self.x_lo - tol) & (x <= self.x_hi + tol)
        my = (y >= self.y_lo - tol) & (y <= self.y_hi + tol)
        return mx, my


def study_window(spec: GridSpec, h_max: float, trim: int = 2) -> Window:
    """Domain of ``spec`` with ``trim * h_max`` removed on every side."""
    cut = trim * h_max
    w = Window(-spec.R1 + cut, spec.R1 - cut, spec.L2 + cut, spec.R2 - cut)
    if w.x_lo >= w.x_hi or w.y_lo >= w.y_hi:
        raise ConfigError(f"h={h_max:g} is too coarse: nothing is left after trimming")
    return w


def _match(coarse: np.ndarray, fine: np.ndarray, h_fine: float, name: str) -> np.ndarray:
    pos = (coarse - fine[0]) / h_fine
    idx = np.rint(pos).astype(int)
    if np.any(np.abs(pos - idx) > 1e-6) or np.any(idx < 0) or np.any(idx >= fine.size):
        raise ConfigError(f"grids do not nest in {name}")
    return idx


def error_norms(coarse: GreekSurface, ref: GreekSurface, window: Window | None = None):
    """``(eps_l2, eps_linf)`` of ``coarse - ref`` on shared nodes inside ``window``.

    ``eps_l2 = sqrt(h^2 sum diff^2)`` with the coarse mesh size ``h``.
    """
    if coarse.kind != ref.kind:
        raise ConfigError(f"cannot compare {coarse.kind} with {ref.kind}")
    ratio = coarse.h / ref.h
    if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
        raise ConfigError(f"grids do not nest: h={coarse.h:g} vs h_ref={ref.h:g}")
    if window is None:
        mx = np.ones(coarse.x.size, bool)
        my = np.ones(coarse.y.size, bool)
    else:
        mx, my = window.mask(coarse.x, coarse.y)
    if not (mx.any() and my.any()):
        raise ConfigError("norm window contains no coarse nodes")
    xc, yc = coarse.x[mx], coarse.y[my]
    ix = _match(xc, ref.x, ref.h, "x")
    iy = _match(yc, ref.y, ref.h, "y")
    diff = coarse.values[np.ix_(mx, my)] - ref.values[np.ix_(ix, iy)]
    linf = float(np.max(np.abs(diff)))
    l2 = float(math.sqrt(coarse.h**2 * np.sum(diff * diff)))
    return l2, linf


def fit_order(points) -> tuple[float, float]:
    """Least-squares fit of ``eps = C h^m`` in log-log coordinates; returns ``(m, C)``."""
    pts = [(float(h), float(e)) for h, e in points]
    if len(pts) < 2 or len({h for h, _ in pts}) < 2:
        raise ConfigError("fit_order needs at least two distinct mesh sizes")
    if any(h <= 0 or e <= 0 or not math.isfinite(e) for h, e in pts):
        raise ConfigError("fit_order needs positive finite h and errors")
    lh = np.log([h for h, _ in pts])
    le = np.log([e for _, e in pts])
    m, c = np.polyfit(lh, le, 1)
    return float(m), float(math.exp(c))


@dataclass
class ConvergenceReport:
    scheme: SchemeKind
    quantity: str
    h_ref: float
    rows: list  # (h, eps_l2, eps_linf), h decreasing
    m_l2: float
    C_l2: float
    m_linf: float
    C_linf: float
    window: Window
    paper_literal: bool = False
    telemetry: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "quantity": self.quantity,
            "h_ref": self.h_ref,
            "paper_literal": self.paper_literal,
            "window": asdict(self.window),
            "rows": [{"h": h, "eps_l2": a, "eps_linf": b} for h, a, b in self.rows],
            "fit": {"l2": {"m": self.m_l2, "C": self.C_l2}, "linf": {"m": self.m_linf, "C": self.C_linf}},
            "telemetry": self.telemetry,
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["h", "eps_l2", "eps_linf"])
            for row in self.rows:
                w.writerow([f"{v:.17g}" for v in row])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


class SolveCache:
    """Memoises full solves by ``(scheme, h)`` for fixed model, expiry and grid bounds.

    The strike does not enter the per-unit-strike solve, so one entry serves
    every contract with the same expiry.
    """

    def __init__(self, params: BatesParams, T: float, spec: GridSpec, **solve_kw):
        self.params = params
        self.T = T
        self.spec = spec
        self.solve_kw = solve_kw
        self._runs: dict = {}

    def key(self, scheme, h):
        return SchemeKind.parse(scheme), round(float(h), 12)

    def get(self, scheme, h) -> SolveReport:
        key = self.key(scheme, h)
        if key not in self._runs:
            self._runs[key] = self._solve(*key)
        return self._runs[key]

    def prefetch(self, pairs, threads: int = 1) -> None:
        """Solve the missing ``(scheme, h)`` pairs, optionally in parallel.

        Each solve is independent and deterministic, so the thread count does
        not change any result.
        """
        todo = []
        for s, h in pairs:
            k = self.key(s, h)
            if k not in self._runs and k not in todo:
                todo.append(k)
        if threads <= 1 or len(todo) < 2:
            for s, h in todo:
                self.get(s, h)
            return
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for k, run in zip(todo, ex.map(lambda k: self._solve(*k), todo)):
                self._runs[k] = run

    def _solve(self, scheme, h):
        grid = build_grid(self.spec.with_h(h))
        return solve_pide(self.params, ContractSpec(K=1.0, T=self.T), grid, scheme, **self.solve_kw)


def _telemetry(run: SolveReport) -> dict:
    # wall time is left out so reports are byte-reproducible
    return {k: v for k, v in run.to_dict().items() if k != "wall_time"}


def _check_h_list(h_list, h_ref):
    hs = sorted({round(float(h), 12) for h in h_list}, reverse=True)
    if not hs:
        raise ConfigError("h_list is empty")
    for h in hs:
        r = h / h_ref
        if h <= 0 or abs(r - round(r)) > 1e-9 * r or round(r) < 1:
            raise ConfigError(f"h={h:g} does not nest onto h_ref={h_ref:g}")
    return hs


def run_convergence_study(scheme, quantity: str, h_list, params: BatesParams, contract: ContractSpec,
                          spec: GridSpec | None = None, *, h_ref: float = H_REF, cache: SolveCache | None = None,
                          window: Window | None = None, paper_literal: bool = False,
                          threads: int = 1) -> ConvergenceReport:
    """Errors of ``quantity`` for each ``h`` against the same scheme at ``h_ref``."""
    scheme = SchemeKind.parse(scheme)
    if quantity not in GREEK_KINDS:
        raise ConfigError(f"unknown quantity {quantity!r}; expected one of {GREEK_KINDS}")
    spec = spec or GridSpec(T=contract.T)
    hs = [h for h in _check_h_list(h_list, h_ref) if h != round(h_ref, 12)]
    if len(hs) < 2:
        raise ConfigError("a convergence study needs at least two mesh sizes coarser than h_ref")
    for h in hs + [h_ref]:
        spec.with_h(h)  # validates divisibility
    if cache is None:
        cache = SolveCache(params, contract.T, spec)
    cache.prefetch([(scheme, h) for h in hs + [h_ref]], threads=threads)
    if window is None:
        window = study_window(spec, max(hs))

    kw = {"paper_literal": paper_literal} if quantity in ("vega", "gamma", "delta") else {}
    ref_run = cache.get(scheme, h_ref)
    ref = greek(quantity, ref_run, params, contract, **kw)
    rows, tele = [], []
    for h in hs:
        run = cache.get(scheme, h)
        gs = greek(quantity, run, params, contract, **kw)
        l2, linf = error_norms(gs, ref, window)
        rows.append((h, l2, linf))
        tele.append(_telemetry(run))
    tele.append(_telemetry(ref_run))
    m2, c2 = fit_order([(h, e) for h, e, _ in rows])
    mi, ci = fit_order([(h, e) for h, _, e in rows])
    return ConvergenceReport(scheme, quantity, h_ref, rows, m2, c2, mi, ci, window, paper_literal, tele)
