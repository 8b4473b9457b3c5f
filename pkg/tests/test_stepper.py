import math
from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp

from bateshoc.analysis import study_window
from bateshoc.grid import GridSpec, build_grid
from bateshoc.jump import apply_jump, build_jump_operator
from bateshoc.linalg import lu_factorize
from bateshoc.model import BatesParams, ConfigError, ContractSpec, discount
from bateshoc.operator import assemble
from bateshoc.stepper import NumericalError, Surface, initial_surface, solve_pide, step

SCHEMES = ["central2", "hoc4"]


def _toy():
    spec = GridSpec(R1=0.8, L2=0.5, R2=2.1, h=0.4, T=0.1, n_steps=4)
    return build_grid(spec)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_identity_dynamics(scheme):
    p = BatesParams(lam=0.0)
    g = build_grid(GridSpec(h=0.2))
    mats = assemble(scheme, p, g)
    bnd = sp.diags((~mats.pde_rows).astype(float)) @ mats.stiff
    frozen = replace(mats, impl=(mats.mass + bnd).tocsr(), expl=mats.mass)
    lu = lu_factorize(frozen.impl)
    u0 = initial_surface(g, scheme)
    u1 = step(u0, None, frozen, build_jump_operator(p, g), lu)
    np.testing.assert_allclose(u1.values, u0.values, atol=1e-14)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_no_jumps_matches_plain_crank_nicolson(scheme):
    p = BatesParams(lam=0.0)
    g = build_grid(GridSpec(h=0.2))
    run = solve_pide(p, ContractSpec(), g, scheme)
    mats = assemble(scheme, p, g)
    lu = lu_factorize(mats.impl)
    u = initial_surface(g, scheme).values.ravel()
    for _ in range(g.n_steps):
        u = lu.solve(mats.expl @ u + mats.bvals).reshape(g.shape)
        u[0, :], u[-1, :] = 1.0, 0.0
        u = u.ravel()
    assert np.array_equal(run.surface.values.ravel(), u)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_one_step_dense_oracle(scheme):
    p = BatesParams()
    g = _toy()
    mats = assemble(scheme, p, g)
    jop = build_jump_operator(p, g)
    lu = lu_factorize(mats.impl)
    u0 = initial_surface(g, scheme)
    u1 = step(u0, None, mats, jop, lu)
    u2 = step(u1, u0, mats, jop, lu)
    # dense CNAB formula
    A = mats.impl.toarray()
    J0, J1 = (apply_jump(jop, s.values, g).ravel() for s in (u0, u1))
    rhs1 = mats.expl.toarray() @ u0.values.ravel() + g.k * mats.mass.toarray() @ J0 + mats.bvals
    ref1 = np.linalg.solve(A, rhs1)
    np.testing.assert_allclose(u1.values.ravel(), ref1, atol=1e-13)
    rhs2 = (mats.expl.toarray() @ u1.values.ravel() + g.k * mats.mass.toarray() @ (1.5 * J1 - 0.5 * J0)
            + mats.bvals)
    np.testing.assert_allclose(u2.values.ravel(), np.linalg.solve(A, rhs2), atol=1e-13)


def test_short_horizon_keeps_payoff():
    p, c = BatesParams(), ContractSpec(T=1e-6)
    g = build_grid(GridSpec(h=0.1, T=1e-6))
    assert g.n_steps == 1
    run = solve_pide(p, c, g)
    u0 = initial_surface(g).values
    assert np.max(np.abs(run.surface.values - u0)) < 1e-4


@pytest.mark.parametrize("scheme", SCHEMES)
def test_put_bounds_and_monotone(scheme):
    p, c = BatesParams(), ContractSpec()
    g = build_grid(GridSpec(h=0.1))
    run = solve_pide(p, c, g, scheme)
    V = c.K * discount(c.T, p) * run.surface.values
    assert V.min() >= -1e-8
    assert V.max() <= c.K * math.exp(-p.r * c.T) + 1e-8
    # the frozen far field u = 1 at x = -R1 sits below the true growth-factored
    # limit and bends the first few nodes; check monotonicity off that layer
    keep = g.x >= study_window(GridSpec(), 0.4).x_lo
    assert np.all(np.diff(V[keep], axis=0) <= 1e-8)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_telemetry_and_determinism(scheme):
    p, c = BatesParams(), ContractSpec()
    g = build_grid(GridSpec(h=0.2))
    a = solve_pide(p, c, g, scheme)
    b = solve_pide(p, c, g, scheme)
    assert a.factor_count == 1 and a.solve_count == g.n_steps == a.n_steps
    assert np.array_equal(a.surface.values, b.surface.values)
    assert len(a.history) == 3 and a.history[-1] is a.surface
    assert a.to_dict()["factor_count"] == 1


def test_nan_detection():
    p = BatesParams()
    g = build_grid(GridSpec(h=0.4))
    mats = assemble("hoc4", p, g)
    bad = initial_surface(g).values.copy()
    bad[5, 5] = np.nan
    with pytest.raises(NumericalError, match="level 1"):
        step(Surface(bad, g, 0), None, mats, build_jump_operator(p, g), lu_factorize(mats.impl))


def test_horizon_mismatch_and_smoothing_option():
    g = build_grid(GridSpec(h=0.4))
    with pytest.raises(ConfigError):
        solve_pide(BatesParams(), ContractSpec(T=1.0), g)
    with pytest.raises(ConfigError):
        initial_surface(g, smoothing="gauss")
    raw = solve_pide(BatesParams(), ContractSpec(), g, smoothing="none")
    assert raw.factor_count == 1


@pytest.mark.parametrize("scheme", SCHEMES)
def test_temporal_order(scheme):
    p, c = BatesParams(), ContractSpec()
    us = {}
    for n in (8, 16, 32):
        g = build_grid(GridSpec(h=0.05, n_steps=n))
        us[n] = solve_pide(p, c, g, scheme).surface.values
    mx, my = study_window(GridSpec(), 0.4).mask(g.x, g.y)
    e1 = np.sqrt(np.sum((us[8] - us[16])[np.ix_(mx, my)] ** 2))
    e2 = np.sqrt(np.sum((us[16] - us[32])[np.ix_(mx, my)] ** 2))
    assert abs(math.log2(e1 / e2) - 2.0) <= 0.3
