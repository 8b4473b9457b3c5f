"""Acceptance suite: one PASS/FAIL line per criterion.

The lines are printed at the end of the pytest run (see ``conftest.py``) and
when this file is executed directly::

    python tests/test_acceptance.py
"""

import json
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from bateshoc.analysis import H_REF, STUDY_H_LIST, run_convergence_study, study_window
from bateshoc.cli import main
from bateshoc.config import RunConfig
from bateshoc.greeks import evaluate_at, greek, vega, gamma
from bateshoc.grid import GridSpec, build_grid
from bateshoc.hedging import EXAMPLE_GAMMA, EXAMPLE_VEGA, hedge_table
from bateshoc.jump import apply_jump, build_jump_operator
from bateshoc.model import BatesParams, ContractSpec
from bateshoc.montecarlo import black_scholes_put, mc_price
from bateshoc.operator import SchemeKind, assemble
from bateshoc.stepper import Surface, initial_surface, solve_pide

pytestmark = pytest.mark.slow

RESULTS = []


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def _study(cache, scheme, q, params, contract):
    return run_convergence_study(scheme, q, STUDY_H_LIST, params, contract, cache.spec, h_ref=H_REF, cache=cache)


def _orders(rep):
    return f"{rep.scheme.value} {rep.quantity} m_l2={rep.m_l2:.2f} m_linf={rep.m_linf:.2f}"


def _in(m, lo, hi):
    return lo <= m <= hi


def test_criterion_1_price_convergence(study_cache, params, contract):
    t0 = time.perf_counter()
    h4 = _study(study_cache, "hoc4", "price", params, contract)
    c2 = _study(study_cache, "central2", "price", params, contract)
    total = study_cache.build_seconds + time.perf_counter() - t0
    ok = (_in(h4.m_l2, 3.5, 4.5) and _in(h4.m_linf, 3.5, 4.5) and _in(c2.m_l2, 1.6, 2.4)
          and _in(c2.m_linf, 1.6, 2.4) and total < 300)
    assert record(1, ok, f"{_orders(h4)} (want [3.5,4.5]); {_orders(c2)} (want [1.6,2.4]); study {total:.0f} s")


def test_criterion_2_vega_convergence(study_cache, params, contract):
    h4 = _study(study_cache, "hoc4", "vega", params, contract)
    c2 = _study(study_cache, "central2", "vega", params, contract)
    ok = min(h4.m_l2, h4.m_linf) >= 3.5 and _in(c2.m_l2, 1.6, 2.4) and _in(c2.m_linf, 1.6, 2.4)
    assert record(2, ok, f"{_orders(h4)} (want >= 3.5); {_orders(c2)} (want [1.6,2.4])")


def test_criterion_3_gamma_convergence(study_cache, params, contract):
    h4 = _study(study_cache, "hoc4", "gamma", params, contract)
    c2 = _study(study_cache, "central2", "gamma", params, contract)
    ok = (_in(h4.m_l2, 2.8, 4.2) and _in(h4.m_linf, 2.8, 4.2) and _in(c2.m_l2, 1.6, 2.4)
          and _in(c2.m_linf, 1.6, 2.4))
    assert record(3, ok, f"{_orders(h4)} (want [2.8,4.2]); {_orders(c2)} (want [1.6,2.4])")


def test_criterion_4_hedge_tables(study_cache, params):
    ok = True
    parts = []
    for spec in (EXAMPLE_VEGA, EXAMPLE_GAMMA):
        rep = hedge_table(spec, params, STUDY_H_LIST, grid_spec=study_cache.spec, h_ref=H_REF, cache=study_cache)
        e4, e2 = rep.errors("hoc4"), rep.errors("central2")
        dec = all(a > b for a, b in zip(e4, e4[1:])) and all(a > b for a, b in zip(e2, e2[1:]))
        below = all(a < b for a, b in zip(e4, e2))
        tenth = e4[-1] < 0.1 * e2[-1]
        ok &= dec and below and tenth
        parts.append(f"{spec.greek}: hoc4 % {[f'{v:.3g}' for v in e4]} central2 % {[f'{v:.3g}' for v in e2]} "
                     f"decreasing={dec} hoc4<central2={below} 10%-rule={tenth}")
    assert record(4, ok, "; ".join(parts))


def test_criterion_5_single_factorisation(study_cache):
    runs = list(study_cache._runs.values())
    bad = [r for r in runs if r.factor_count != 1 or r.solve_count != r.surface.grid.n_steps]
    assert record(5, not bad and len(runs) == 10, f"{len(runs)} solves, {len(bad)} with factor_count != 1 "
                                                 "or solve_count != n_steps")


def test_criterion_6_monte_carlo(params, contract):
    spec = RunConfig().mc_grid()
    parts, ok = [], True
    for lam in (params.lam, 0.0):
        p = replace(params, lam=lam)
        run = solve_pide(p, contract, build_grid(spec), "hoc4")
        pide = evaluate_at(greek("price", run, p, contract), 100.0, 0.01)
        mc = mc_price(p, contract, 100.0, 0.01, n_paths=1_000_000, n_steps=250, seed=0, threads=4)
        z = (pide - mc.price) / mc.stderr
        ok &= abs(z) < 3
        parts.append(f"lambda={lam}: pide {pide:.5f} mc {mc.price:.5f} +- {mc.stderr:.5f} (z={z:+.2f})")
    # Black-Scholes limit: no jumps, variance frozen at theta
    pb = BatesParams(lam=0.0, sigma_v=1e-6, theta=0.04)
    mc = mc_price(pb, contract, 100.0, 0.04, n_paths=1_000_000, n_steps=50, seed=1, threads=4)
    bs = black_scholes_put(100.0, contract.K, contract.T, pb.r, 0.2)
    z = (mc.price - bs) / mc.stderr
    ok &= abs(z) < 3
    parts.append(f"BS limit: mc {mc.price:.5f} bs {bs:.5f} (z={z:+.2f})")
    assert record(6, ok, "; ".join(parts))


def test_criterion_7_jump_operator(params):
    from scipy import integrate
    from bateshoc.model import jump_density_z

    worst = 0.0
    for h in (0.4, 0.2, 0.1, 0.05, 0.025):
        g = build_grid(GridSpec(h=h))
        out = apply_jump(build_jump_operator(params, g), np.ones(g.shape), g, right_value=1.0)
        worst = max(worst, float(np.max(np.abs(out - params.lam))))
    f = lambda x: np.exp(-x * x) * np.cos(3 * x)
    errs = []
    for h in (0.1, 0.05, 0.025):
        g = build_grid(GridSpec(h=h))
        op = build_jump_operator(params, g)
        out = apply_jump(op, np.repeat(f(g.x)[:, None], g.M + 1, axis=1), g)
        e = 0.0
        for x0 in (-1.0, 0.0, 0.6, 1.5):
            i = int(np.argmin(np.abs(g.x - x0)))
            ref = integrate.quad(lambda z: f(g.x[i] + z) * float(jump_density_z(z, params)),
                                 params.gamma_j - 12 * params.delta_j, params.gamma_j + 12 * params.delta_j,
                                 epsabs=1e-14, epsrel=1e-13, limit=400)[0]
            e = max(e, abs(out[i, 0] - params.lam * (ref + op.far_left[i])))
        errs.append(e)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    ok = worst <= 1e-8 and np.all(orders > 3.5)
    assert record(7, ok, f"max |J[1] - lambda| = {worst:.2e}; quadrature orders {np.round(orders, 2).tolist()}")


def test_criterion_8_identities(params, contract):
    g = build_grid(GridSpec(h=0.1))
    v0 = max(float(np.max(np.abs(vega(initial_surface(g, s), params, contract).values))) for s in ("hoc4", "central2"))
    X, _ = np.meshgrid(g.x, g.y, indexing="ij")
    rel = 0.0
    for s in ("hoc4", "central2"):
        for a, b in ((0.0, 1.0), (3.0, -2.0), (-1.5, 0.25)):
            gs = gamma(Surface(a + b * np.exp(X), g, 0, SchemeKind.parse(s)), params, contract)
            scale = (abs(a) + abs(b)) * np.exp(-gs.x) / contract.K
            rel = max(rel, float(np.max(np.abs(gs.values) / scale[:, None])))
    rows = 0.0
    for s in ("hoc4", "central2"):
        m = assemble(s, params, g)
        rows = max(rows, float(np.max(np.abs(m.residual(np.ones(g.shape)))) / np.abs(m.stiff).max()))
    temporal = {}
    win = study_window(GridSpec(), 0.4)
    for s in ("hoc4", "central2"):
        us = {}
        for n in (8, 16, 32):
            gg = build_grid(GridSpec(h=0.05, n_steps=n))
            us[n] = solve_pide(params, contract, gg, s).surface.values
        mx, my = win.mask(gg.x, gg.y)
        e1 = np.linalg.norm((us[8] - us[16])[np.ix_(mx, my)])
        e2 = np.linalg.norm((us[16] - us[32])[np.ix_(mx, my)])
        temporal[s] = math.log2(e1 / e2)
    ok = v0 == 0.0 and rel <= 1e-10 and rows <= 1e-13 and all(abs(t - 2.0) <= 0.3 for t in temporal.values())
    assert record(8, ok, f"vega(payoff) max {v0:.1e}; gamma(a+b e^x) rel {rel:.1e}; row sums rel {rows:.1e}; "
                         f"temporal order " + ", ".join(f"{k} {v:.2f}" for k, v in temporal.items())
                  + " (want 2.0 +- 0.3)")


def test_criterion_9_determinism(tmp_path, params, contract, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"h_list": [0.4, 0.2], "h_ref": 0.1}))
    dirs = []
    for t in ("1", "4"):
        d = tmp_path / f"t{t}"
        for cmd in (["converge"], ["hedge"], ["greeks", "--h", "0.2", "--quantity", "all"], ["price", "--h", "0.2"]):
            assert main(cmd + ["--config", str(cfg), "--threads", t, "--out", str(d)]) == 0
        dirs.append(d)
    capsys.readouterr()
    names = sorted(p.name for p in dirs[0].iterdir())
    same = names == sorted(p.name for p in dirs[1].iterdir()) and all(
        (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names)
    mcs = [mc_price(params, contract, 100.0, 0.01, n_paths=300_000, n_steps=50, seed=5, threads=t) for t in (1, 2, 4)]
    mc_same = mcs[0] == mcs[1] == mcs[2]
    assert record(9, same and mc_same, f"{len(names)} output files byte-identical at threads 1/4: {same}; "
                                       f"MC identical at threads 1/2/4: {mc_same}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
