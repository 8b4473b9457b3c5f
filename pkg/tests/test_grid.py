import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bateshoc.analysis import H_REF, STUDY_H_LIST
from bateshoc.grid import GridSpec, build_grid, common_nodes
from bateshoc.model import ConfigError


def test_counts():
    g = build_grid(GridSpec(h=0.4))
    assert g.N == 10 and g.x.size == 21
    assert g.M == 10 and g.y.size == 11
    assert g.shape == (21, 11)


def test_time_step_example():
    g = build_grid(GridSpec(h=0.1, T=0.5, mesh_ratio=0.4))
    assert g.n_steps == 125
    assert g.k == pytest.approx(0.004, rel=1e-15)


@given(h=st.sampled_from([0.4, 0.2, 0.1, 0.05, 0.025]), c=st.floats(0.05, 5), T=st.floats(0.05, 2))
def test_horizon_hit_exactly(h, c, T):
    g = build_grid(GridSpec(h=h, mesh_ratio=c, T=T))
    assert abs(g.n_steps * g.k - T) < 1e-12
    assert g.k <= c * h * h * (1 + 1e-12)
    assert abs(g.k / h**2 - c) <= c * g.k / T + 1e-12


@pytest.mark.parametrize("kw,name", [(dict(R1=4.05), "R1"), (dict(R2=4.13), "R2-L2")])
def test_non_divisible_bound(kw, name):
    with pytest.raises(ConfigError, match=name):
        GridSpec(h=0.1, **kw)


def test_spec_invariants():
    for kw in (dict(h=0), dict(L2=0.0, R2=4.0), dict(R2=0.05), dict(mesh_ratio=0)):
        with pytest.raises(ConfigError):
            GridSpec(**kw)


@pytest.mark.parametrize("h,stride", [(0.4, 16), (0.05, 2)])
def test_common_nodes(h, stride):
    c, f = build_grid(GridSpec(h=h)), build_grid(GridSpec(h=H_REF))
    ix, iy = common_nodes(c, f)
    assert ix[1] - ix[0] == stride and iy[1] - iy[0] == stride
    np.testing.assert_allclose(f.x[ix], c.x, atol=1e-12)
    np.testing.assert_allclose(f.y[iy], c.y, atol=1e-12)


def test_all_study_sizes_nest():
    f = build_grid(GridSpec(h=H_REF))
    for h in STUDY_H_LIST:
        common_nodes(build_grid(GridSpec(h=h)), f)


def test_non_nested():
    coarse = GridSpec(R1=4.2, L2=0.1, R2=4.3, h=0.035)
    fine = GridSpec(R1=4.2, L2=0.1, R2=4.3, h=0.025)
    with pytest.raises(ConfigError, match="nest"):
        common_nodes(build_grid(coarse), build_grid(fine))
    with pytest.raises(ConfigError):
        common_nodes(build_grid(GridSpec(h=0.2)), build_grid(GridSpec(h=0.1, R1=2.0)))


def test_node_of_round_trip():
    g = build_grid(GridSpec(h=0.4))
    for i, j in [(0, 0), (3, 7), (20, 10)]:
        assert g.node_of(g.flat_index(i, j)) == (g.x[i], g.y[j])
