"""Plain-text persistence: two-column tables and trajectory snapshots."""

import os
import re
from pathlib import Path

import numpy as np

from .background import Background
from .errors import ConfigError
from .grid import RadialGrid

SNAPSHOT_COLUMNS = ("s", "xi0", "phi", "Qp", "Qpp", "lambda_rad", "lambda_sph", "phidot")
DIAGNOSTIC_COLUMNS = ("t", "dt", "newton_iters", "sup_phidot", "band_lo", "band_hi", "sup_rm")


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def read_two_column(path) -> tuple[np.ndarray, np.ndarray]:
    """(s, value) columns from a whitespace or comma separated file; '#' starts a comment."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = re.split(r"[,\s]+", line)
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two columns, got {len(parts)}")
            rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    data = np.array(rows)
    return data[:, 0], data[:, 1]


def write_two_column(path, s, values, header: str | None = None) -> None:
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for a, b in zip(s, values):
            fh.write(f"{fmt(a)} {fmt(b)}\n")


def parse_background(label: str, n: int) -> Background:
    """Inverse of Background.label."""
    label = label.strip()
    if label == "flat":
        return Background.flat(n)
    m = re.fullmatch(r"complex_hyperbolic k=(\S+)", label)
    if m:
        return Background.complex_hyperbolic(n, float(m.group(1)))
    m = re.fullmatch(r"tabulated source=(.+)", label)
    if m:
        s, xi = read_two_column(m.group(1))
        return Background.tabulated(n, s, xi, source=m.group(1))
    raise ConfigError(f"cannot reconstruct background from {label!r}")


# snapshots -------------------------------------------------------------------

def write_snapshot(path, state, epsilon: float | None = None) -> None:
    """One CSV per state with the documented column set."""
    from .geometry import log_det_ratio

    g = state.grid
    e = np.exp(-state.s)
    with np.errstate(divide="ignore"):
        if state.degenerate:
            bt = state.tables
            phidot = np.log(state.Qpp / bt.xi_p) + (state.n - 1) * np.log(state.Qp / bt.xi)
        else:
            phidot = log_det_ratio(state)
    cols = (state.s, state.xi0, state.phi, state.Qp, state.Qpp, state.Qpp * e, state.Qp * e, phidot)
    lines = [
        f"# t={fmt(state.t)}",
        f"# n={state.n}",
        f"# background={state.background.label}",
        f"# grid={fmt(g.s_min)},{fmt(g.s_max)},{g.N}",
    ]
    if epsilon is not None:
        lines.append(f"# epsilon={fmt(epsilon)}")
    if state.degenerate:
        lines.append("# degenerate=1")
    lines.append(",".join(SNAPSHOT_COLUMNS))
    body = np.column_stack(cols)
    lines.extend(",".join(fmt(v) for v in row) for row in body)
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path):
    """(header dict, column dict) of a snapshot file."""
    header, rows, names = {}, [], None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                header[key.strip()] = value.strip()
            elif names is None:
                names = line.split(",")
            else:
                rows.append([float(v) for v in line.split(",")])
    if names is None or tuple(names) != SNAPSHOT_COLUMNS:
        raise ValueError(f"{path}: unexpected columns {names}")
    data = np.array(rows)
    return header, {name: data[:, i] for i, name in enumerate(names)}


def state_from_snapshot(path):
    """Rebuild the MetricState stored in a snapshot (positivity is re-checked)."""
    from .geometry import MetricState, background_tables

    header, cols = read_snapshot(path)
    n = int(header["n"])
    s_min, s_max, N = header["grid"].split(",")
    grid = RadialGrid(float(s_min), float(s_max), int(N))
    bg = parse_background(header["background"], n)
    t = float(header["t"])
    phi = cols["phi"]
    bt = background_tables(bg, grid)
    xi0_p = cols["Qpp"] + t * bt.rho_pp - grid.d2(phi)
    state = MetricState(grid, bg, cols["xi0"], xi0_p, t, phi, degenerate=header.get("degenerate") == "1")
    eps = float(header["epsilon"]) if "epsilon" in header else None
    return state, eps


def write_trajectory(directory, traj) -> list:
    """Snapshots as snap_XXXX.csv plus diagnostics.csv; returns written paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for old in d.glob("snap_*.csv"):
        old.unlink()
    paths = []
    for i, st in enumerate(traj.states):
        p = d / f"snap_{i:04d}.csv"
        write_snapshot(p, st, traj.epsilon)
        paths.append(p)
    diag = traj.diagnostics
    lines = [",".join(DIAGNOSTIC_COLUMNS)]
    cols = [getattr(diag, c) for c in DIAGNOSTIC_COLUMNS]
    lines.extend(",".join(fmt(v) for v in row) for row in zip(*cols))
    (d / "diagnostics.csv").write_text("\n".join(lines) + "\n")
    paths.append(d / "diagnostics.csv")
    return paths


def read_trajectory(directory):
    """Load a trajectory written by write_trajectory."""
    from .flow import StepDiagnostics, Trajectory

    d = Path(directory)
    files = sorted(d.glob("snap_*.csv"))
    if not files:
        raise FileNotFoundError(f"no snapshots in {directory}")
    states, eps = [], None
    for f in files:
        st, eps = state_from_snapshot(f)
        states.append(st)
    diag_path = d / "diagnostics.csv"
    cols = {c: np.array([]) for c in DIAGNOSTIC_COLUMNS}
    if diag_path.exists():
        lines = diag_path.read_text().split()
        if len(lines) > 1:
            data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
            cols = {c: data[:, i] for i, c in enumerate(DIAGNOSTIC_COLUMNS)}
    return Trajectory(tuple(states), StepDiagnostics(**cols), None, epsilon=eps)


def trajectory_dirs(root) -> list:
    """Directories under root (inclusive) that hold snapshots, sorted."""
    out = []
    for dirpath, _, filenames in os.walk(root):
        if any(f.startswith("snap_") and f.endswith(".csv") for f in filenames):
            out.append(Path(dirpath))
    return sorted(out)
