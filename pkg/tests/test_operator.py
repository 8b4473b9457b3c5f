import numpy as np
import pytest
import scipy.sparse as sp

from bateshoc.grid import GridSpec, build_grid
from bateshoc.model import BatesParams, ConfigError, put_payoff_transformed
from bateshoc.operator import SchemeKind, assemble, boundary_closure, dump_coo, pde_coefficients

SCHEMES = ["central2", "hoc4"]


def _mesh(g):
    return np.meshgrid(g.x, g.y, indexing="ij")


def _exact_Lu(p, X, Y):
    # u = sin(x) e^{-y} and its derivatives, by hand
    a, c, d, e = pde_coefficients(p, Y)
    s, co, ey = np.sin(X), np.cos(X), np.exp(-Y)
    uxx, uyy, uxy = -s * ey, s * ey, -co * ey
    ux, uy = co * ey, -s * ey
    return a * (uxx + uyy) + c * uxy + d * ux + e * uy


@pytest.mark.parametrize("scheme", SCHEMES)
def test_annihilates_constants(scheme):
    p = BatesParams()
    g = build_grid(GridSpec(h=0.1))
    m = assemble(scheme, p, g)
    r = m.residual(np.ones(g.shape))
    assert np.max(np.abs(r)) <= 1e-13 * np.abs(m.stiff).max()


def test_central_convection_of_x():
    p = BatesParams()
    g = build_grid(GridSpec(h=0.1))
    m = assemble("central2", p, g)
    X, Y = _mesh(g)
    out = (m.stiff @ X.ravel()).reshape(g.shape)
    expect = -(0.5 * p.sigma_v * Y - p.r + p.lam * p.xi_b)
    np.testing.assert_allclose(out[m.pde_rows.reshape(g.shape)], expect[m.pde_rows.reshape(g.shape)], atol=1e-12)


def test_compact_convection_of_x_fourth_order():
    p = BatesParams()
    errs = []
    for h in (0.2, 0.1, 0.05):
        g = build_grid(GridSpec(h=h))
        X, Y = _mesh(g)
        d = pde_coefficients(p, Y)[2]
        r = assemble("hoc4", p, g).residual(X, d)
        errs.append(np.max(np.abs(r[:, g.y >= 0.9])))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 14), ratios


@pytest.mark.parametrize("scheme,expect", [("central2", 4.0), ("hoc4", 16.0)])
def test_truncation_order(scheme, expect):
    p = BatesParams()
    errs = []
    for h in (0.2, 0.1, 0.05):
        g = build_grid(GridSpec(h=h))
        X, Y = _mesh(g)
        r = assemble(scheme, p, g).residual(np.sin(X) * np.exp(-Y), _exact_Lu(p, X, Y))
        keep = np.ix_(np.abs(g.x) <= 3.2, (g.y >= 0.9) & (g.y <= 3.3))
        errs.append(np.max(np.abs(r[keep])))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    order = np.log2(ratios)
    assert np.all(np.abs(ratios[-1] - expect) < 0.15 * expect), ratios
    assert order[-1] >= (3.9 if scheme == "hoc4" else 1.9)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_stencil_structure(scheme):
    g = build_grid(GridSpec(h=0.2))
    m = assemble(scheme, BatesParams(), g)
    A = m.impl.tocsr()
    counts = np.diff(A.indptr)
    assert counts[m.pde_rows].max() <= 9
    # pattern symmetric on the block of PDE rows and columns
    rows = np.flatnonzero(m.pde_rows)
    B = (A[rows][:, rows] != 0).astype(int)
    assert (B != B.T).nnz == 0
    # y-fastest ordering: all couplings within M + 2 of the diagonal
    assert m.bandwidth <= g.M + 2 + (3 if scheme == "hoc4" else 1)
    assert np.all(np.diff(A.indices[A.indptr[5]:A.indptr[6]]) > 0)


def test_boundary_closure_vector_and_payoff_limits():
    g = build_grid(GridSpec(h=0.4))
    rows, cols, vals, bvals, pde = boundary_closure(SchemeKind.HOC4, g)
    b = bvals.reshape(g.shape)
    assert np.all(b[0, :] == 1.0) and np.all(b[-1, :] == 0.0)
    assert np.all(b[1:-1, :] == 0.0)
    # the payoff only approaches the far-field values at x = -R1
    assert put_payoff_transformed(-4.0) == pytest.approx(1 - np.exp(-4.0))
    assert put_payoff_transformed(-4.0) == pytest.approx(0.9817, abs=1e-4)
    assert put_payoff_transformed(4.0) == 0.0


@pytest.mark.parametrize("scheme", SCHEMES)
def test_neumann_rows_vanish_on_y_constant_data(scheme):
    g = build_grid(GridSpec(h=0.2))
    m = assemble(scheme, BatesParams(), g)
    u = np.repeat(np.sin(g.x)[:, None], g.M + 1, axis=1)
    r = (m.stiff @ u.ravel()).reshape(g.shape)
    assert np.max(np.abs(r[1:-1, 0])) < 1e-13
    assert np.max(np.abs(r[1:-1, -1])) < 1e-13


@pytest.mark.parametrize("scheme", SCHEMES)
def test_neumann_order(scheme):
    # one-sided rows approximate u_y: exact on polynomials of the stencil degree
    g = build_grid(GridSpec(h=0.2))
    m = assemble(scheme, BatesParams(), g)
    deg = 4 if scheme == "hoc4" else 2
    X, Y = _mesh(g)
    u = (Y - g.y[0]) ** deg
    r = (m.stiff @ u.ravel()).reshape(g.shape) / g.h
    assert np.max(np.abs(r[1:-1, 0])) < 1e-9


def test_degenerate_y_rejected():
    with pytest.raises(ConfigError):
        GridSpec(L2=0.0, R2=4.0)


def test_dump_coo_round_trip(tmp_path):
    g = build_grid(GridSpec(h=0.4))
    m = assemble("hoc4", BatesParams(), g)
    path = tmp_path / "impl.txt"
    dump_coo(m.impl, path)
    data = np.loadtxt(path)
    back = sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=m.impl.shape)
    assert abs(back - m.impl).max() == 0.0


def test_scheme_parse():
    assert SchemeKind.parse("HOC4") is SchemeKind.HOC4
    assert SchemeKind.CENTRAL2.order == 2
    with pytest.raises(ConfigError):
        SchemeKind.parse("upwind")
