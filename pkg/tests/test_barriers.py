import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from krflow import Background, MetricState, RadialGrid
from krflow.barriers import (
    SMOOTHSTEP_MAX_SLOPE,
    b_of_kappa,
    build_cutoff,
    build_exhaustion,
    conformal_stretch,
    cutoff_samples,
    cutoff_table,
    eval_f,
    f_derivatives,
    smoothstep,
    smoothstep_derivatives,
)
from krflow.errors import DomainError
from krflow.geometry import eigenvalues

KAPPAS = [0.01, 0.05, 0.09, 0.12]


@pytest.mark.parametrize("kappa", KAPPAS)
def test_f_vanishes_at_start(kappa):
    assert eval_f(kappa, 1 - kappa) == 0.0
    assert eval_f(kappa, 0.2) == 0.0


def test_f_value():
    assert eval_f(0.1, 0.95) == pytest.approx(math.log(4 / 3), rel=1e-14)


def test_f_blows_up():
    assert eval_f(0.1, 1 - 1e-12) > 20
    assert eval_f(0.1, np.nextafter(1.0, 0.0)) > 30
    with pytest.raises(DomainError):
        eval_f(0.1, 1.0)


@pytest.mark.parametrize("kappa", [0.0, 0.125, -0.1])
def test_kappa_range(kappa):
    with pytest.raises(DomainError):
        build_cutoff(kappa)


@given(st.floats(0.005, 0.12), st.floats(0.01, 0.999))  # f'' jumps at s = 1 - kappa
def test_f_derivatives_by_differences(kappa, frac):
    s = 1 - kappa + frac * kappa * 0.99
    h = 1e-7 * kappa
    f1, f2 = f_derivatives(kappa, np.array([s]))
    fd1 = (eval_f(kappa, s + h) - eval_f(kappa, s - h)) / (2 * h)
    assert f1[0] == pytest.approx(fd1, rel=1e-5, abs=1e-6)
    fd2 = (f_derivatives(kappa, np.array([s + h]))[0][0] - f_derivatives(kappa, np.array([s - h]))[0][0]) / (2 * h)
    assert f2[0] == pytest.approx(fd2, rel=1e-5, abs=1e-5)


def test_smoothstep_shape():
    u = np.linspace(-1, 2, 301)
    p = smoothstep(u)
    assert p.min() == 0 and p.max() == 1
    assert np.all(np.diff(p) >= 0)
    d1, _ = smoothstep_derivatives(u)
    assert d1.max() == pytest.approx(SMOOTHSTEP_MAX_SLOPE, rel=1e-3)


@pytest.mark.parametrize("kappa", KAPPAS)
def test_cutoff_invariants(kappa):
    fam = build_cutoff(kappa)
    s = cutoff_samples(kappa, 10_000)
    F = fam.frakF(s)
    assert np.all(F[s <= 1 - kappa] == 0.0)
    d1, _ = fam.derivatives(s)
    assert np.all(d1 >= 0)
    p1, _ = fam.phi_derivatives(s)
    assert np.all((p1 >= 0) & (p1 <= 2 / kappa**2))
    assert np.all(np.diff(F) >= -1e-15)


def test_closed_form_beyond_transition():
    fam = build_cutoff(0.1)
    for s in (0.92, 0.95, 0.99, 0.999):
        expect = eval_f(0.1, s) - eval_f(0.1, 0.92) + fam.frakF_quadrature(0.92)
        assert fam.frakF(np.array([s]))[0] == pytest.approx(fam.frakF_quadrature(s), abs=1e-9)
        assert fam.frakF(np.array([s]))[0] == pytest.approx(expect, abs=1e-12)


@pytest.mark.parametrize("kappa", [0.05, 0.1])
def test_frakF_derivative_matches_integrand(kappa):
    fam = build_cutoff(kappa)
    s = np.linspace(fam.a1 + 1e-4, 1 - kappa / 2, 25)
    h = 1e-6
    fd = (fam.frakF(s + h) - fam.frakF(s - h)) / (2 * h)
    np.testing.assert_allclose(fam.derivatives(s)[0], fd, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("kappa", [0.01, 0.05, 0.09, 0.1])
def test_b_finite_and_stable(kappa):
    fam = build_cutoff(kappa)
    b1, b2 = b_of_kappa(fam, 10_000), b_of_kappa(fam, 20_000)
    assert math.isfinite(b1) and b1 > 0
    assert abs(b2 - b1) / b1 < 0.01


def test_cutoff_table_columns():
    tab = cutoff_table(build_cutoff(0.05))
    assert set(tab) == {"s", "f", "phi_bump", "frakF", "weighted_sum"}
    assert all(np.all(np.isfinite(v)) for v in tab.values())


@pytest.mark.parametrize("bg", [Background.flat(2), Background.kahler_einstein(2)], ids=["flat", "ke"])
def test_exhaustion_certified(bg):
    g = RadialGrid(-4, 6, 401) if bg.kind == "flat" else RadialGrid(-6, -0.01, 401)
    ex = build_exhaustion(bg, g)
    assert ex.bound <= 1.0
    assert np.all(np.diff(ex.rho) > 0)


def test_exhaustion_flat_origin_critical():
    g = RadialGrid(-30, 2, 801)
    ex = build_exhaustion(Background.flat(2), g)
    assert ex.grad_sq[0] < 1e-12


def test_stretch_locality_and_growth():
    g = RadialGrid(-4, 6, 801)
    st_ = MetricState.from_background(g, Background.flat(2))
    out, rep = conformal_stretch(st_, 8.0, build_cutoff(0.05))
    m = rep.identity_mask
    assert rep.identity_exact and m.sum() > 0
    np.testing.assert_array_equal(out.Qp[m], st_.Qp[: out.grid.N][m])
    np.testing.assert_array_equal(out.Qpp[m], st_.Qpp[: out.grid.N][m])
    assert np.all(rep.F >= 0)
    for a, b in zip(eigenvalues(out), eigenvalues(st_)):
        assert np.all(a >= b[: out.grid.N] * (1 - 1e-12))
    assert rep.probe.diverges
    assert math.isfinite(rep.sup_rm_stretched)


def test_stretch_rejects_small_radius():
    g = RadialGrid(-4, 6, 401)
    with pytest.raises(DomainError):
        conformal_stretch(MetricState.from_background(g, Background.flat(2)), 1.0, build_cutoff(0.05))


def _flat_probe():
    g = RadialGrid(-4, 6, 801)
    st_ = MetricState.from_background(g, Background.flat(2))
    return conformal_stretch(st_, 8.0, build_cutoff(0.05))[1].probe


def test_probe_growth_is_logarithmic():
    probe = _flat_probe()
    x = np.log(1 / probe.deltas)
    slopes = np.diff(probe.distances) / np.diff(x)
    assert np.all(slopes > 0)
    np.testing.assert_allclose(slopes[-3:], probe.slope, rtol=0.05)


@pytest.mark.xfail(strict=True, reason="distance grows like log(1/delta); 1e3 needs delta far below 1e-300")
def test_probe_reaches_threshold_at_1e_minus_6():
    probe = _flat_probe()
    assert probe.deltas[-1] <= 1e-6 and probe.reached
