import numpy as np
import pytest
from hypothesis import given, strategies as st

from krflow import RadialGrid
from krflow.errors import GridMismatch, OutOfRange, StencilUnderflow


def test_nodes_and_spacing():
    g = RadialGrid(0.0, 1.6, 17)
    assert g.ds == pytest.approx(0.1)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == pytest.approx(1.6)


def test_too_few_nodes():
    with pytest.raises(StencilUnderflow):
        RadialGrid(0.0, 1.0, 4)


def test_bad_interval():
    with pytest.raises(ValueError):
        RadialGrid(1.0, 0.0, 64)


@pytest.mark.parametrize("p", [0, 1, 2, 3, 4])
def test_polynomials_differentiated_exactly(p):
    # centered stencils are exact to degree 4; one-sided ends to degree 2
    g = RadialGrid(-1.0, 2.0, 64)
    s = g.nodes
    d1, d2 = g.derivatives(s**p)
    keep = slice(None) if p <= 2 else slice(2, -2)
    np.testing.assert_allclose(d1[keep], (p * s ** max(p - 1, 0) if p else 0 * s)[keep], atol=1e-9)
    np.testing.assert_allclose(d2[keep], (p * (p - 1) * s ** max(p - 2, 0) if p > 1 else 0 * s)[keep], atol=1e-8)


def test_interior_fourth_order():
    errs = []
    for N in (101, 201):
        g = RadialGrid(-1.0, 1.0, N)
        d1 = g.d1(np.sin(3 * g.nodes))
        mid = slice(N // 4, 3 * N // 4)
        errs.append(np.max(np.abs(d1[mid] - 3 * np.cos(3 * g.nodes[mid]))))
    assert errs[0] / errs[1] > 12


def test_refine_halves_spacing():
    g = RadialGrid(0.0, 1.0, 33)
    assert g.refine().ds == pytest.approx(g.ds / 2)


def test_index_of_out_of_range():
    g = RadialGrid(0.0, 1.0, 33)
    with pytest.raises(OutOfRange):
        g.index_of(2.0)


def test_check_same():
    with pytest.raises(GridMismatch):
        RadialGrid(0.0, 1.0, 33).check_same(RadialGrid(0.0, 1.0, 65))


@given(st.floats(0.0, 0.4))
def test_collar_mask_excludes_ends(width):
    g = RadialGrid(0.0, 1.0, 101)
    m = g.collar_mask(width)
    assert np.all(np.abs(g.nodes[m] - 0.0) >= width - 1e-12)
    assert np.all(np.abs(g.nodes[m] - 1.0) >= width - 1e-12)
