"""Ratio spreads hedged against vega or gamma, with mesh-refinement error tables.

A position writes one put at ``K_short`` and buys ``ratio`` puts at
``K_long``, with ``ratio = G_short / G_long`` so the net Greek ``G`` is zero.
Both legs are read from one per-unit-strike solve: each leg rescales the
Greek surface to its strike and interpolates at its own moneyness.

The vega example uses a vertical put spread (spot 135, short 100, long 150).
The gamma example is a ratio write spread (spot 100, long 100, short 120);
it is additionally delta-hedged with the underlying, and the net theta of
the hedged book decides whether the trade is recommended.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import H_REF, STUDY_H_LIST, SolveCache
from .greeks import evaluate_at, greek
from .grid import GridSpec
from .model import BatesParams, ConfigError, ContractSpec
from .operator import SchemeKind

__all__ = [
    "SpreadSpec",
    "DegenerateHedgeError",
    "HedgeRow",
    "HedgeReport",
    "EXAMPLE_VEGA",
    "EXAMPLE_GAMMA",
    "hedge_ratio",
    "position_greeks",
    "gamma_write_spread",
    "hedge_table",
    "vega_hedge_table",
    "gamma_hedge_table",
    "spread_payoff",
]

# Lowest variance inside the trimmed domain of the coarsest (h = 0.4) compact
# grid on the default bounds: y = L2 + 2 * 0.4 = 0.9.
DEFAULT_SIGMA0 = 0.09


class DegenerateHedgeError(ArithmeticError):
    """The long leg's Greek is too small to hedge against."""


@dataclass(frozen=True)
class SpreadSpec:
    S0: float
    K_short: float
    K_long: float
    sigma0: float = DEFAULT_SIGMA0
    T: float = 0.5
    greek: str = "vega"

    def __post_init__(self):
        if not self.S0 > 0:
            raise ConfigError(f"S0 must be > 0, got {self.S0}")
        if not (self.K_short > 0 and self.K_long > 0):
            raise ConfigError("strikes must be positive")
        if not self.sigma0 > 0:
            raise ConfigError(f"sigma0 must be > 0, got {self.sigma0}")
        if not self.T > 0:
            raise ConfigError(f"T must be > 0, got {self.T}")
        if self.greek not in ("vega", "gamma"):
            raise ConfigError(f"greek must be 'vega' or 'gamma', got {self.greek!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "SpreadSpec":
        allowed = {"S0", "K_short", "K_long", "sigma0", "T", "greek"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown spread field(s): {sorted(unknown)}")
        kw = {k: (v if k == "greek" else float(v)) for k, v in data.items()}
        return cls(**kw)


EXAMPLE_VEGA = SpreadSpec(S0=135.0, K_short=100.0, K_long=150.0, greek="vega")
EXAMPLE_GAMMA = SpreadSpec(S0=100.0, K_short=120.0, K_long=100.0, greek="gamma")


def _leg(run, params, spec: SpreadSpec, kind: str, K: float) -> float:
    gs = greek(kind, run, params, ContractSpec(K=1.0, T=spec.T)).for_strike(K)
    return evaluate_at(gs, spec.S0, spec.sigma0)


def hedge_ratio(spec: SpreadSpec, params: BatesParams, run) -> float:
    """Long puts per written put that zero the net ``spec.greek``.

    ``run`` is a :class:`SolveReport` of the per-unit-strike problem.
    """
    g_short = _leg(run, params, spec, spec.greek, spec.K_short)
    g_long = _leg(run, params, spec, spec.greek, spec.K_long)
    if abs(g_long) < 1e-12:
        raise DegenerateHedgeError(f"long-leg {spec.greek} {g_long:.3g} is too small to hedge with")
    return g_short / g_long


def position_greeks(spec: SpreadSpec, params: BatesParams, run, ratio: float, quantity: float = 1.0) -> dict:
    """Net Greeks of ``-quantity`` puts at ``K_short`` plus ``quantity * ratio`` at ``K_long``."""
    out = {}
    for kind in ("price", "vega", "gamma", "delta", "theta"):
        s = _leg(run, params, spec, kind, spec.K_short)
        l = _leg(run, params, spec, kind, spec.K_long)
        out[kind] = quantity * (ratio * l - s)
        out[kind + "_scale"] = quantity * (abs(ratio * l) + abs(s))
    return out


@dataclass
class HedgeRow:
    scheme: str
    h: float
    ratio: float
    ref_ratio: float
    pct_error: float
    net_delta: float | None = None
    underlying_qty: float | None = None
    net_theta: float | None = None
    verdict: str | None = None


def gamma_write_spread(spec: SpreadSpec, params: BatesParams, run) -> dict:
    """Gamma-neutral ratio write spread, delta-hedged with the underlying.

    ``underlying_qty`` is the number of shares to hold (negative means sell).
    The underlying has no theta, so the book's theta is the options' theta.
    """
    if spec.greek != "gamma":
        raise ConfigError("gamma_write_spread needs spec.greek == 'gamma'")
    ratio = hedge_ratio(spec, params, run)
    g = position_greeks(spec, params, run, ratio)
    qty = -g["delta"]
    return {
        "ratio": ratio,
        "net_gamma": g["gamma"],
        "net_delta": g["delta"],
        "underlying_qty": qty,
        "hedged_delta": g["delta"] + qty,
        "net_theta": g["theta"],
        "verdict": "recommend" if g["theta"] > 0 else "do not recommend",
    }


@dataclass
class HedgeReport:
    example: str
    spec: SpreadSpec
    h_ref: float
    reference: str
    rows: list = field(default_factory=list)
    reference_ratios: dict = field(default_factory=dict)

    def errors(self, scheme) -> list:
        s = SchemeKind.parse(scheme).value
        return [r.pct_error for r in self.rows if r.scheme == s]

    def to_dict(self) -> dict:
        return {
            "example": self.example,
            "spec": asdict(self.spec),
            "h_ref": self.h_ref,
            "reference": self.reference,
            "reference_ratios": self.reference_ratios,
            "rows": [asdict(r) for r in self.rows],
        }

    def write_csv(self, path) -> None:
        cols = ["scheme", "h", "ratio", "ref_ratio", "pct_error"]
        extra = self.spec.greek == "gamma"
        if extra:
            cols += ["net_delta", "underlying_qty", "net_theta", "verdict"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                d = asdict(r)
                w.writerow([_fmt(d[c]) for c in cols])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return "" if v is None else str(v)


def hedge_table(spec: SpreadSpec, params: BatesParams, h_list=STUDY_H_LIST, *,
                grid_spec: GridSpec | None = None, schemes=("hoc4", "central2"), h_ref: float = H_REF,
                reference: str = "own", cache: SolveCache | None = None, threads: int = 1) -> HedgeReport:
    """Percentage error of the hedge ratio per scheme and mesh size.

    ``reference="own"`` compares each scheme with itself at ``h_ref``;
    ``reference="hoc4"`` uses the compact scheme's ``h_ref`` ratio for both.
    """
    if reference not in ("own", "hoc4"):
        raise ConfigError(f"reference must be 'own' or 'hoc4', got {reference!r}")
    if not len(h_list):
        raise ConfigError("h_list is empty")
    grid_spec = grid_spec or GridSpec(T=spec.T)
    if abs(grid_spec.T - spec.T) > 1e-12:
        grid_spec = GridSpec(grid_spec.R1, grid_spec.L2, grid_spec.R2, grid_spec.h, spec.T, grid_spec.mesh_ratio)
    cache = cache or SolveCache(params, spec.T, grid_spec)
    schemes = [SchemeKind.parse(s) for s in schemes]
    hs = sorted({round(float(h), 12) for h in h_list}, reverse=True)
    ref_schemes = schemes if reference == "own" else [SchemeKind.HOC4]
    cache.prefetch([(s, h) for s in schemes for h in hs] + [(s, h_ref) for s in ref_schemes], threads)

    report = HedgeReport(example=spec.greek, spec=spec, h_ref=h_ref, reference=reference)
    for s in ref_schemes:
        report.reference_ratios[s.value] = hedge_ratio(spec, params, cache.get(s, h_ref))
    for s in schemes:
        ref = report.reference_ratios[s.value if reference == "own" else "hoc4"]
        for h in hs:
            run = cache.get(s, h)
            if spec.greek == "gamma":
                g = gamma_write_spread(spec, params, run)
                ratio = g["ratio"]
                extra = dict(net_delta=g["net_delta"], underlying_qty=g["underlying_qty"],
                             net_theta=g["net_theta"], verdict=g["verdict"])
            else:
                ratio = hedge_ratio(spec, params, run)
                extra = {}
            pct = 100.0 * abs(ratio - ref) / abs(ref)
            report.rows.append(HedgeRow(s.value, h, ratio, ref, pct, **extra))
    return report


def vega_hedge_table(params: BatesParams, h_list=STUDY_H_LIST, spec: SpreadSpec = EXAMPLE_VEGA, **kw) -> HedgeReport:
    return hedge_table(spec, params, h_list, **kw)


def gamma_hedge_table(params: BatesParams, h_list=STUDY_H_LIST, spec: SpreadSpec = EXAMPLE_GAMMA, **kw) -> HedgeReport:
    return hedge_table(spec, params, h_list, **kw)


def spread_payoff(spec: SpreadSpec, ratio: float, S) -> np.ndarray:
    """Expiry value of the position (one written put, ``ratio`` long puts)."""
    S = np.asarray(S, dtype=float)
    return ratio * np.maximum(spec.K_long - S, 0.0) - np.maximum(spec.K_short - S, 0.0)

