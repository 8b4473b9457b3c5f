"""Command-line front end: ``bates-hoc {price,greeks,converge,hedge,mc-check}``.

Exit codes: 0 success, 1 a scientific check failed, 2 configuration error,
3 domain error (query point outside the grid, degenerate hedge).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from .analysis import SolveCache, run_convergence_study
from .config import RunConfig, load_config, threads_from_env
from .greeks import GREEK_KINDS, evaluate_at, greek, write_csv
from .grid import build_grid
from .hedging import DegenerateHedgeError, hedge_table, spread_payoff
from .model import ConfigError, DomainError
from .montecarlo import mc_price
from .operator import SchemeKind
from .stepper import solve_pide

__all__ = ["main", "build_parser"]

log = logging.getLogger("bateshoc")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3


def _h_list(text: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    return tuple(vals)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--scheme", choices=["hoc4", "central2", "both"])
    common.add_argument("--h", type=float, help="mesh size for single solves")
    common.add_argument("--h-list", type=_h_list, help="comma-separated mesh sizes for studies")
    common.add_argument("--quantity", choices=list(GREEK_KINDS) + ["all"])
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="worker threads (default: $BATES_HOC_THREADS or 1)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--paper-literal-greeks", action="store_true", default=None,
                        help="use the vega/gamma formulas exactly as printed in the source")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="bates-hoc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("price", parents=[common], help="solve once and price at (S, sigma)")
    sp.add_argument("--S", type=float)
    sp.add_argument("--sigma", type=float, help="instantaneous variance")

    sg = sub.add_parser("greeks", parents=[common], help="Greek surfaces as CSV")
    sg.add_argument("--S", type=float)
    sg.add_argument("--sigma", type=float)

    sub.add_parser("converge", parents=[common], help="grid-convergence study against h_ref")

    sh = sub.add_parser("hedge", parents=[common], help="hedge-ratio error tables")
    sh.add_argument("--example", choices=["vega", "gamma", "both"])
    sh.add_argument("--reference", choices=["own", "hoc4"])

    sm = sub.add_parser("mc-check", parents=[common], help="compare the PIDE price with Monte Carlo")
    sm.add_argument("--n-paths", type=int)
    return p


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    threads = args.threads if args.threads is not None else threads_from_env(cfg.threads)
    kw = dict(
        scheme=args.scheme,
        h=args.h,
        h_list=args.h_list,
        quantity=args.quantity,
        seed=args.seed,
        threads=threads,
        out=args.out,
        paper_literal_greeks=args.paper_literal_greeks,
    )
    if getattr(args, "n_paths", None) is not None:
        kw["n_paths"] = args.n_paths
    if getattr(args, "example", None):
        kw["hedge_example"] = args.example
    if getattr(args, "reference", None):
        kw["hedge_reference"] = args.reference
    S = getattr(args, "S", None)
    sig = getattr(args, "sigma", None)
    if S is not None or sig is not None:
        kw["point"] = (S if S is not None else cfg.point[0], sig if sig is not None else cfg.point[1])
    return cfg.with_overrides(**kw)


def _outdir(cfg: RunConfig):
    if cfg.out is None:
        return None
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _single_scheme(cfg: RunConfig) -> SchemeKind:
    if cfg.scheme == "both":
        raise ConfigError("this command needs a single --scheme (hoc4 or central2)")
    return SchemeKind.parse(cfg.scheme or "hoc4")


def _solve(cfg: RunConfig, spec=None):
    grid = build_grid(spec or cfg.grid)
    return solve_pide(cfg.params, cfg.contract, grid, _single_scheme(cfg), **cfg.solver)


def cmd_price(cfg: RunConfig) -> int:
    S, sigma = cfg.point
    if not (S > 0 and sigma > 0):
        raise DomainError(f"need S > 0 and sigma > 0, got S={S}, sigma={sigma}")
    run = _solve(cfg)
    ps = greek("price", run, cfg.params, cfg.contract)
    price = evaluate_at(ps, S, sigma)
    log.info("solve took %.2f s", run.wall_time)
    tele = {k: v for k, v in run.to_dict().items() if k != "wall_time"}
    result = {"S": S, "sigma": sigma, "K": cfg.contract.K, "T": cfg.contract.T, "price": price, **tele}
    out = _outdir(cfg)
    if out:
        write_csv(ps, os.path.join(out, f"price_surface_{run.scheme.value}.csv"))
        _write_json(os.path.join(out, f"price_{run.scheme.value}.json"), result)
    _emit(result)
    return EXIT_OK


def cmd_greeks(cfg: RunConfig) -> int:
    S, sigma = cfg.point
    run = _solve(cfg)
    kinds = GREEK_KINDS if cfg.quantity in ("all", "price") else (cfg.quantity,)
    out = _outdir(cfg)
    values = {}
    for kind in kinds:
        kw = {"paper_literal": cfg.paper_literal_greeks} if kind in ("vega", "gamma") else {}
        gs = greek(kind, run, cfg.params, cfg.contract, **kw)
        values[kind] = evaluate_at(gs, S, sigma)
        if out:
            write_csv(gs, os.path.join(out, f"{kind}_{run.scheme.value}.csv"))
    result = {"S": S, "sigma": sigma, "scheme": run.scheme.value, "h": run.surface.grid.h,
              "paper_literal": cfg.paper_literal_greeks, "values": values}
    if out:
        _write_json(os.path.join(out, f"greeks_{run.scheme.value}.json"), result)
    _emit(result)
    return EXIT_OK


def cmd_converge(cfg: RunConfig) -> int:
    quantities = GREEK_KINDS[:3] if cfg.quantity == "all" else (cfg.quantity,)
    cache = SolveCache(cfg.params, cfg.contract.T, cfg.grid, **cfg.solver)
    out = _outdir(cfg)
    summary = []
    for scheme in cfg.schemes():
        for q in quantities:
            rep = run_convergence_study(scheme, q, cfg.h_list, cfg.params, cfg.contract, cfg.grid,
                                        h_ref=cfg.h_ref, cache=cache, paper_literal=cfg.paper_literal_greeks,
                                        threads=cfg.threads)
            if out:
                stem = os.path.join(out, f"converge_{scheme.value}_{q}")
                rep.write_csv(stem + ".csv")
                rep.write_json(stem + ".json")
            summary.append({"scheme": scheme.value, "quantity": q, "m_l2": rep.m_l2, "m_linf": rep.m_linf,
                            "rows": [list(r) for r in rep.rows]})
    _emit(summary)
    return EXIT_OK


def cmd_hedge(cfg: RunConfig) -> int:
    specs = {"vega": [cfg.spread_vega], "gamma": [cfg.spread_gamma],
             "both": [cfg.spread_vega, cfg.spread_gamma]}[cfg.hedge_example]
    grid_spec = cfg.grid
    cache = SolveCache(cfg.params, cfg.contract.T, grid_spec, **cfg.solver)
    out = _outdir(cfg)
    result = []
    for spec in specs:
        if abs(spec.T - cfg.contract.T) > 1e-12:
            raise ConfigError("spread expiry must equal the contract expiry")
        rep = hedge_table(spec, cfg.params, cfg.h_list, grid_spec=grid_spec,
                          schemes=[s.value for s in cfg.schemes()], h_ref=cfg.h_ref,
                          reference=cfg.hedge_reference, cache=cache, threads=cfg.threads)
        entry = rep.to_dict()
        if out:
            rep.write_csv(os.path.join(out, f"hedge_{spec.greek}.csv"))
            rep.write_json(os.path.join(out, f"hedge_{spec.greek}.json"))
            ratio = next(iter(rep.reference_ratios.values()))
            S = np.linspace(0.5 * min(spec.K_short, spec.K_long), 1.5 * max(spec.K_short, spec.K_long), 201)
            with open(os.path.join(out, f"payoff_{spec.greek}.csv"), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["S", "payoff"])
                for s, v in zip(S, spread_payoff(spec, ratio, S)):
                    w.writerow([f"{s:.17g}", f"{v:.17g}"])
        result.append(entry)
    _emit(result)
    return EXIT_OK


def cmd_mc_check(cfg: RunConfig) -> int:
    mc = cfg.mc
    # validate the Monte Carlo inputs before the (slower) PIDE solve
    if isinstance(mc.n_paths, bool) or mc.n_paths < 10_000 or mc.n_paths % 2:
        raise ConfigError(f"n_paths must be an even integer >= 10000, got {mc.n_paths}")
    spec = cfg.mc_grid()
    run = _solve(cfg, spec)
    ps = greek("price", run, cfg.params, cfg.contract)
    pide = evaluate_at(ps, mc.S, mc.sigma0)
    res = mc_price(cfg.params, cfg.contract, mc.S, mc.sigma0, mc.n_paths, mc.n_steps, mc.seed,
                   threads=cfg.threads, drift_shift=mc.drift_shift)
    diff = pide - res.price
    ok = abs(diff) < 3.0 * res.stderr
    result = {"S": mc.S, "sigma0": mc.sigma0, "pide_price": pide, "scheme": run.scheme.value,
              "h": run.surface.grid.h, "mc": res.to_dict(), "diff": diff,
              "z": diff / res.stderr if res.stderr > 0 else math.inf, "pass": ok}
    out = _outdir(cfg)
    if out:
        _write_json(os.path.join(out, "mc_check.json"), result)
    _emit(result)
    return EXIT_OK if ok else EXIT_CHECK


_COMMANDS = {"price": cmd_price, "greeks": cmd_greeks, "converge": cmd_converge, "hedge": cmd_hedge,
             "mc-check": cmd_mc_check}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, DegenerateHedgeError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
