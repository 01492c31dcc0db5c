import numpy as np
import pytest
from hypothesis import given, strategies as st

from krflow import Background, FlowConfig, RadialGrid, run
from krflow import initial_data as idt
from krflow.tables import fmt, read_trajectory, state_from_snapshot, write_snapshot, write_trajectory


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrip(x):
    assert float(fmt(x)) == x


@pytest.mark.parametrize("bg", [Background.flat(2), Background.kahler_einstein(2),
                                Background.complex_hyperbolic(3, -0.5)], ids=lambda b: b.label)
def test_snapshot_roundtrip(tmp_path, bg):
    g = RadialGrid(-3, 3, 61) if bg.kind == "flat" else RadialGrid(-5, -0.2, 61)
    st_ = idt.bump(g, bg, float(g.nodes[30]), 0.5, 0.2, 1.5)
    write_snapshot(tmp_path / "s.csv", st_, epsilon=0.01)
    back, eps = state_from_snapshot(tmp_path / "s.csv")
    assert eps == 0.01 and back.background.label == bg.label
    np.testing.assert_array_equal(back.xi0, st_.xi0)
    np.testing.assert_allclose(back.Qpp, st_.Qpp, rtol=1e-12)


def test_trajectory_roundtrip(tmp_path):
    g = RadialGrid(-3, 3, 61)
    traj = run(idt.bump(g, Background.flat(2), 0, 0.7, 0.3, 1.5), FlowConfig("implicit_be", 0.05, 1e-2))
    write_trajectory(tmp_path, traj)
    back = read_trajectory(tmp_path)
    np.testing.assert_array_equal(back.times, traj.times)
    np.testing.assert_array_equal(back.states[-1].phi, traj.states[-1].phi)
    np.testing.assert_array_equal(back.diagnostics.t, traj.diagnostics.t)


def test_snapshot_columns(tmp_path):
    g = RadialGrid(-3, 3, 61)
    write_snapshot(tmp_path / "s.csv", idt.homothety(g, Background.flat(2), 1.0))
    header = [ln for ln in (tmp_path / "s.csv").read_text().splitlines() if not ln.startswith("#")][0]
    assert header.split(",")[0] == "s" and "phidot" in header
