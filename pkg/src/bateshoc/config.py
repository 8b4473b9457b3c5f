"""JSON run configuration.

Every section is optional; missing fields take the defaults and unknown
fields are rejected so that typos in experiment configs fail loudly::

    {
      "model":    {"kappa": 2, "theta": 0.01, "sigma_v": 0.1, "rho": -0.5,
                   "r": 0.05, "lambda": 0.2, "gamma_j": -0.5, "delta_j": 0.1},
      "contract": {"K": 100, "T": 0.5},
      "grid":     {"R1": 4, "L2": 0.1, "R2": 4.1, "h": 0.1, "mesh_ratio": 0.4},
      "solver":   {"jump_tol": 1e-10, "lu_backend": "superlu", "smoothing": "kreiss"},
      "scheme": "hoc4" | "central2" | "both",
      "point":    {"S": 100, "sigma": 0.09},
      "h_list": [0.4, 0.2, 0.1, 0.05], "h_ref": 0.025,
      "quantity": "price",
      "hedge":    {"example": "both", "reference": "own",
                   "vega": {...SpreadSpec fields...}, "gamma": {...}},
      "mc":       {"n_paths": 1000000, "n_steps": 250, "seed": 0, "S": 100,
                   "sigma0": 0.01, "drift_shift": 0.0,
                   "grid": {"L2": 0.025, "R2": 4.025, "h": 0.025}},
      "threads": 1,
      "out": "out",
      "paper_literal_greeks": false
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace

from .analysis import H_REF, STUDY_H_LIST
from .grid import GridSpec
from .hedging import EXAMPLE_GAMMA, EXAMPLE_VEGA, SpreadSpec
from .model import BatesParams, ConfigError, ContractSpec
from .operator import SchemeKind

__all__ = ["RunConfig", "MCConfig", "load_config", "THREADS_ENV"]

THREADS_ENV = "BATES_HOC_THREADS"

_SOLVER_KEYS = {"jump_tol", "lu_backend", "smoothing"}


@dataclass(frozen=True)
class MCConfig:
    n_paths: int = 1_000_000
    n_steps: int = 250
    seed: int = 0
    S: float = 100.0
    sigma0: float = 0.01
    drift_shift: float = 0.0
    # sigma0 = 0.01 is close to the artificial u_y = 0 edge at y = L2, whose
    # error decays only as L2 shrinks, and x needs h < sqrt(sigma0 T) ~ 0.07.
    # L2 = h = 0.025 puts sigma0 on node j = 3 with a price error ~2e-3.
    grid: dict = field(default_factory=lambda: {"L2": 0.025, "R2": 4.025, "h": 0.025})

    @classmethod
    def from_dict(cls, data: dict) -> "MCConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown mc field(s): {sorted(unknown)}")
        kw = {}
        for k, v in data.items():
            if k in ("n_paths", "n_steps", "seed"):
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigError(f"mc field {k!r} must be an integer, got {v!r}")
                kw[k] = v
            elif k == "grid":
                if not isinstance(v, dict):
                    raise ConfigError("mc.grid must be an object")
                kw[k] = dict(v)
            else:
                kw[k] = _num(v, f"mc.{k}")
        return cls(**kw)


@dataclass(frozen=True)
class RunConfig:
    params: BatesParams = field(default_factory=BatesParams)
    contract: ContractSpec = field(default_factory=ContractSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    solver: dict = field(default_factory=dict)
    scheme: str | None = None  # None: hoc4 for single solves, both for studies
    point: tuple = (100.0, 0.09)
    h_list: tuple = STUDY_H_LIST
    h_ref: float = H_REF
    quantity: str = "price"
    hedge_example: str = "both"
    hedge_reference: str = "own"
    spread_vega: SpreadSpec = EXAMPLE_VEGA
    spread_gamma: SpreadSpec = EXAMPLE_GAMMA
    mc: MCConfig = field(default_factory=MCConfig)
    threads: int = 1
    out: str | None = None
    paper_literal_greeks: bool = False

    def schemes(self):
        if self.scheme in (None, "both"):
            return [SchemeKind.HOC4, SchemeKind.CENTRAL2]
        return [SchemeKind.parse(self.scheme)]

    def mc_grid(self) -> GridSpec:
        data = {k: getattr(self.grid, k) for k in ("R1", "L2", "R2", "h", "mesh_ratio")}
        data.update(self.mc.grid)
        return GridSpec.from_dict(data, T=self.contract.T)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "h" in kw:
            kw["grid"] = self.grid.with_h(kw.pop("h"))
        if "seed" in kw:
            kw["mc"] = replace(self.mc, seed=kw.pop("seed"))
        if "n_paths" in kw:
            kw["mc"] = replace(kw.get("mc", self.mc), n_paths=kw.pop("n_paths"))
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.scheme not in (None, "both"):
            SchemeKind.parse(self.scheme)
        if not self.h_list:
            raise ConfigError("h_list is empty")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.hedge_example not in ("vega", "gamma", "both"):
            raise ConfigError(f"hedge example must be vega, gamma or both, got {self.hedge_example!r}")
        bad = set(self.solver) - _SOLVER_KEYS
        if bad:
            raise ConfigError(f"unknown solver field(s): {sorted(bad)}")


def _num(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name} must be a number, got {v!r}")
    return float(v)


def _section(data, name):
    v = data.get(name, {})
    if not isinstance(v, dict):
        raise ConfigError(f"section {name!r} must be an object")
    return v


_TOP = {"model", "contract", "grid", "solver", "scheme", "point", "h_list", "h_ref", "quantity", "hedge",
        "mc", "threads", "out", "paper_literal_greeks"}


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP
    if unknown:
        raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
    params = BatesParams.from_dict(_section(data, "model"))
    contract = ContractSpec.from_dict(_section(data, "contract"))
    grid = GridSpec.from_dict(_section(data, "grid"), T=contract.T)
    kw = dict(params=params, contract=contract, grid=grid, solver=dict(_section(data, "solver")))
    if "scheme" in data:
        kw["scheme"] = str(data["scheme"]).lower()
    if "point" in data:
        pt = _section(data, "point")
        if set(pt) - {"S", "sigma"}:
            raise ConfigError(f"unknown point field(s): {sorted(set(pt) - {'S', 'sigma'})}")
        kw["point"] = (_num(pt.get("S", 100.0), "point.S"), _num(pt.get("sigma", 0.09), "point.sigma"))
    if "h_list" in data:
        if not isinstance(data["h_list"], list):
            raise ConfigError("h_list must be a list of numbers")
        kw["h_list"] = tuple(_num(h, "h_list entry") for h in data["h_list"])
    if "h_ref" in data:
        kw["h_ref"] = _num(data["h_ref"], "h_ref")
    if "quantity" in data:
        kw["quantity"] = str(data["quantity"])
    if "hedge" in data:
        hd = _section(data, "hedge")
        extra = set(hd) - {"example", "reference", "vega", "gamma"}
        if extra:
            raise ConfigError(f"unknown hedge field(s): {sorted(extra)}")
        kw["hedge_example"] = hd.get("example", "both")
        kw["hedge_reference"] = hd.get("reference", "own")
        base = {"T": contract.T}
        if "vega" in hd:
            kw["spread_vega"] = SpreadSpec.from_dict({**_spec_dict(EXAMPLE_VEGA), **base, **hd["vega"], "greek": "vega"})
        if "gamma" in hd:
            kw["spread_gamma"] = SpreadSpec.from_dict({**_spec_dict(EXAMPLE_GAMMA), **base, **hd["gamma"],
                                                       "greek": "gamma"})
    if "mc" in data:
        kw["mc"] = MCConfig.from_dict(_section(data, "mc"))
    if "threads" in data:
        t = data["threads"]
        if isinstance(t, bool) or not isinstance(t, int):
            raise ConfigError("threads must be an integer")
        kw["threads"] = t
    if "out" in data:
        kw["out"] = str(data["out"])
    if "paper_literal_greeks" in data:
        kw["paper_literal_greeks"] = bool(data["paper_literal_greeks"])
    # spreads follow the contract expiry unless given explicitly
    for key, ex in (("spread_vega", EXAMPLE_VEGA), ("spread_gamma", EXAMPLE_GAMMA)):
        if key not in kw and contract.T != ex.T:
            kw[key] = replace(ex, T=contract.T)
    cfg = RunConfig(**kw)
    cfg.validate()
    return cfg


def _spec_dict(spec: SpreadSpec) -> dict:
    return {f.name: getattr(spec, f.name) for f in fields(spec)}


def load_config(path=None) -> RunConfig:
    """Read ``path`` (or return the defaults).  JSON syntax errors become
    :class:`ConfigError` with the line and column."""
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_dict(data)


def threads_from_env(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1, got {n}")
    return n
