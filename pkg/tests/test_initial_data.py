import math

import numpy as np
import pytest

from krflow import Background, RadialGrid
from krflow import initial_data as idt
from krflow.curvature import curvature
from krflow.geometry import equivalence_band, ratios
from krflow.tables import write_two_column

FLAT = Background.flat(2)


def test_homothety_band(flat_grid):
    b = equivalence_band(idt.homothety(flat_grid, FLAT, 2.5), FLAT)
    assert (b.c_lo, b.c_hi) == pytest.approx((2.5, 2.5))


@pytest.mark.parametrize("width", [0.3, 1.0, 2.0])
def test_band_safe_amplitude_keeps_band(width):
    g = RadialGrid(-8, 8, 801)
    st_ = idt.bump(g, FLAT, 0.0, width, idt.band_safe_amplitude(width), 1.5)
    b = equivalence_band(st_, FLAT)
    assert 1.05 - 1e-9 <= b.c_lo and b.c_hi <= 1.95 + 1e-9


@pytest.mark.parametrize("target", [10.0, 100.0])
def test_curvature_bump_hits_target(target):
    g = RadialGrid(-3, 3, 1201)
    st_ = idt.curvature_bump(g, FLAT, target)
    assert curvature(st_).sup_norm == pytest.approx(target, rel=1e-3)
    b = equivalence_band(st_, FLAT)
    assert b.c_lo >= 1 and b.c_hi <= 2


@pytest.mark.parametrize("d", [0.01, 0.05])
def test_mollified_kink_band(d):
    g = RadialGrid(-3, 3, 601)
    st_, ref, delta = idt.mollified_kink_for_band(g, FLAT, d, 0.0, 1.0, 0.3, 1.5)
    assert idt.band_distance(st_, ref) == pytest.approx(d, rel=1e-6)
    assert delta > 0
    lr, ls = ratios(st_, ref)
    assert np.all((1 - d) * (1 - 1e-9) <= np.minimum(lr, ls))
    assert np.all(np.maximum(lr, ls) <= (1 + d) * (1 + 1e-9))


def test_plateau_is_degenerate_and_below_h():
    g = RadialGrid(-6, -0.25, 401)
    bg = Background.kahler_einstein(2)
    st_ = idt.plateau(g, bg, -3.5, -2.5, 0.5)
    assert st_.degenerate
    inside = (g.nodes > -3.4) & (g.nodes < -2.6)
    assert np.all(st_.Qpp[inside] == 0)
    lr, ls = ratios(st_, bg)
    assert lr.max() <= 1 + 1e-12 and ls.max() <= 1 + 1e-12


def test_plateau_must_fit():
    g = RadialGrid(-6, -0.25, 401)
    with pytest.raises(ValueError):
        idt.plateau(g, Background.kahler_einstein(2), -6.2, -2.5, 0.5)


def test_tabulated_roundtrip(tmp_path):
    s = np.linspace(-4, 4, 401)
    write_two_column(tmp_path / "xi0.csv", s, 2 * np.exp(s))
    g = RadialGrid(-3, 3, 121)
    st_ = idt.tabulated(g, FLAT, str(tmp_path / "xi0.csv"))
    b = equivalence_band(st_, FLAT)
    assert (b.c_lo, b.c_hi) == pytest.approx((2, 2), rel=1e-6)
    assert math.isfinite(curvature(st_).sup_norm)
