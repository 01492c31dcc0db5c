import math

import numpy as np
import pytest

from krflow import Background, FlowConfig, MetricState, RadialGrid, run
from krflow import initial_data as idt
from krflow.errors import CflViolation
from krflow.flow import cfl_limit, regularize, rhs, step_explicit, step_implicit
from krflow.geometry import eigenvalues, log_det_ratio, ratios

from conftest import flat_state

KE = Background.kahler_einstein(2)


def ke_phi(c, t, n=2):
    """Potential of the branch g(t) = (c + t) h: phi = n[(c+t) log(c+t) - c log c - t]."""
    return n * ((c + t) * math.log(c + t) - c * math.log(c) - t)


def test_rhs_flat_fixed_point(flat_grid):
    np.testing.assert_array_equal(rhs(flat_state(flat_grid)), 0.0)


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_rhs_flat_homothety(flat_grid, c):
    np.testing.assert_allclose(rhs(flat_state(flat_grid, c=c)), 2 * math.log(c), rtol=1e-14)


def test_rhs_on_ke_branch(ke_grid):
    c, t = 1.2, 0.4
    st_ = MetricState.from_background(ke_grid, KE, c).with_phi(t, np.zeros(ke_grid.N))
    np.testing.assert_allclose(rhs(st_), 2 * math.log(c + t), rtol=1e-12)


@pytest.mark.parametrize("step", [step_explicit, step_implicit])
def test_zero_step_is_identity(flat_grid, step):
    st_ = idt.bump(flat_grid, Background.flat(2), 0.0, 0.7, 0.3, 1.5)
    assert step(st_, 0.0) is st_


def test_explicit_fixed_point(flat_grid):
    st_ = flat_state(flat_grid)
    out = step_explicit(st_, cfl_limit(st_, 0.5))
    np.testing.assert_array_equal(out.phi, 0.0)


def test_explicit_homothety_step(flat_grid):
    st_ = flat_state(flat_grid, c=2.0)
    dt = cfl_limit(st_, 0.5)
    out = step_explicit(st_, dt)
    assert np.ptp(out.phi) < 1e-14
    assert out.phi[0] == pytest.approx(dt * 2 * math.log(2), rel=1e-12)


def test_explicit_refuses_cfl_violation(flat_grid):
    st_ = flat_state(flat_grid)
    with pytest.raises(CflViolation):
        step_explicit(st_, 2 * cfl_limit(st_, 0.5))


def test_implicit_ke_homothety_step(ke_grid):
    st_ = MetricState.from_background(ke_grid, KE, 1.0)
    out = step_implicit(st_, 1e-3)
    lr, ls = ratios(out, KE)
    np.testing.assert_allclose(lr, 1 + 1e-3, rtol=1e-9)
    np.testing.assert_allclose(ls, 1 + 1e-3, rtol=1e-9)


@pytest.mark.parametrize("dt", [1e-3, 0.1, 1.0])
def test_implicit_flat_homothety_constant(flat_grid, dt):
    out = step_implicit(flat_state(flat_grid, c=3.0), dt)
    assert np.ptp(out.phi) < 1e-10


def test_run_flat_stationary(flat_grid):
    traj = run(flat_state(flat_grid), FlowConfig("implicit_be", 1.0, 0.1, snapshot_times=(0.5, 1.0)))
    for st_ in traj.states:
        np.testing.assert_allclose(st_.Qp, flat_state(flat_grid).Qp, rtol=1e-12)


def test_run_explicit_ke_branch_exact():
    g = RadialGrid(-6.0, -0.05, 64)
    traj = run(MetricState.from_background(g, KE, 1.0), FlowConfig("explicit_rk4", 0.02, snapshot_times=(0.02,)))
    end = traj.states[-1]
    np.testing.assert_allclose(end.phi, ke_phi(1.0, end.t), rtol=1e-10)


def test_backward_euler_first_order(ke_grid):
    errs = []
    for dt in (2e-2, 1e-2, 5e-3):
        traj = run(MetricState.from_background(ke_grid, KE, 1.0), FlowConfig("implicit_be", 0.2, dt))
        end = traj.states[-1]
        errs.append(np.max(np.abs(end.phi - ke_phi(1.0, end.t))))
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(0.8 <= r <= 1.2 for r in rates)


def test_comparison_preserved():
    g = RadialGrid(-3, 3, 121)
    bg = Background.flat(2)
    lo = idt.bump(g, bg, 0.0, 0.7, 0.2, 1.5)
    hi = idt.bump(g, bg, 0.0, 0.7, 0.2, 1.6)
    lr0, ls0 = ratios(hi, lo)
    assert lr0.min() >= 1 and ls0.min() >= 1
    cfg = FlowConfig("implicit_be", 0.2, 1e-2, snapshot_times=(0.05, 0.1, 0.2))
    for a, b in zip(run(lo, cfg).states, run(hi, cfg).states):
        assert np.all(log_det_ratio(a) <= log_det_ratio(b) + 1e-12)


def test_run_is_deterministic(flat_grid):
    st_ = idt.bump(flat_grid, Background.flat(2), 0.0, 0.7, 0.3, 1.5)
    cfg = FlowConfig("implicit_be", 0.05, 1e-2, snapshot_times=(0.05,))
    a, b = run(st_, cfg), run(st_, cfg)
    np.testing.assert_array_equal(a.states[-1].phi, b.states[-1].phi)


def test_snapshot_times_recorded(flat_grid):
    cfg = FlowConfig("implicit_be", 0.1, 1e-2, snapshot_times=(0.03, 0.07, 0.1))
    traj = run(flat_state(flat_grid, c=2.0), cfg)
    np.testing.assert_allclose(traj.times, [0, 0.03, 0.07, 0.1], atol=1e-12)


def test_degenerate_needs_family():
    g = RadialGrid(-6, -0.25, 201)
    base = idt.plateau(g, KE, -3.5, -2.5, 0.5)
    with pytest.raises(ValueError):
        run(base, FlowConfig("implicit_be", 0.1, 1e-2))


def test_regularize_adds_background():
    g = RadialGrid(-6, -0.25, 201)
    base = idt.plateau(g, KE, -3.5, -2.5, 0.5)
    reg = regularize(base, 0.1)
    lr, ls = eigenvalues(reg)
    assert lr.min() > 0 and ls.min() > 0


def test_epsilon_family_is_cauchy():
    g = RadialGrid(-6, -0.25, 201)
    base = idt.plateau(g, KE, -3.5, -2.5, 0.5)
    cfg = FlowConfig("implicit_be", 0.1, 2e-3, snapshot_times=(0.1,), boundary="extrapolated",
                     epsilon_list=(1e-1, 1e-2, 1e-3))
    fam = run(base, cfg)
    assert all(math.isclose(tr.times[-1], 0.1) for tr in fam.trajectories)
    d_coarse = dict(fam.distances[(1e-1, 1e-2)])
    d_fine = dict(fam.distances[(1e-2, 1e-3)])
    t = max(d_fine)
    assert d_fine[t] < d_coarse[t]


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig("implicit_be", 1.0)
    with pytest.raises(ValueError):
        FlowConfig("explicit_rk4", 1.0, snapshot_times=(0.5, 0.2))
    with pytest.raises(ValueError):
        FlowConfig("implicit_be", 1.0, 0.1, epsilon_list=(1e-3, 1e-2))
