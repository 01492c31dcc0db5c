"""Markdown reports, measured-constant CSVs and SVG line plots."""

import json
import math
from pathlib import Path

import numpy as np

from .harness import CheckResult
from .tables import fmt

MEASURED_COLUMNS = ("check", "status", "measured_constant", "violation_t", "violation_s")


def _num(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "nan" if math.isnan(x) else fmt(x)


def _violation(res: CheckResult) -> tuple:
    v = res.first_violation or (None, None)
    t = v[0] if len(v) > 0 else None
    s = v[1] if len(v) > 1 else None
    return t, s


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (str, int, bool)) or x is None:
        return x
    return repr(x)


def results_to_json(results) -> str:
    rows = [{"name": r.name, "status": r.status, "measured_constant": _jsonable(r.measured_constant),
             "first_violation": _jsonable(r.first_violation), "details": _jsonable(r.details)}
            for r in results]
    return json.dumps(rows, indent=1, sort_keys=True) + "\n"


def results_from_json(text: str) -> list:
    out = []
    for row in json.loads(text):
        mc = row["measured_constant"]
        mc = float(mc) if mc is not None else None
        fv = row["first_violation"]
        fv = tuple(float(v) if v is not None else None for v in fv) if fv is not None else None
        out.append(CheckResult(row["name"], row["status"], mc, fv, row["details"]))
    return out


def measured_csv(results) -> str:
    lines = [",".join(MEASURED_COLUMNS)]
    for r in results:
        t, s = _violation(r)
        lines.append(",".join([r.name, r.status, _num(r.measured_constant), _num(t), _num(s)]))
    return "\n".join(lines) + "\n"


def _series(details: dict) -> dict:
    """Equal-length numeric lists in details, keyed by name, against 'times' or 't'."""
    times = details.get("times", details.get("t"))
    if not isinstance(times, (list, tuple, np.ndarray)) or len(times) < 2:
        return {}
    out = {}
    for key, val in details.items():
        if key in ("times", "t") or not isinstance(val, (list, tuple, np.ndarray)) or len(val) != len(times):
            continue
        try:
            arr = np.asarray(val, dtype=float)
        except (TypeError, ValueError):
            continue
        if arr.ndim == 1:
            out[key] = arr
    return {"__t__": np.asarray(times, dtype=float), **out} if out else {}


def line_plot(path, t, curves: dict, title: str, logx: bool = False) -> None:
    """Deterministic SVG of named curves against t."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "krflow", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name, y in curves.items():
            ax.plot(t, y, label=name)
        if logx and np.all(np.asarray(t) > 0):
            ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def diagnostics_curves(traj) -> dict:
    d = traj.diagnostics
    if len(d.t) == 0:
        return {}
    return {"__t__": np.asarray(d.t), "sup |phidot|": np.asarray(d.sup_phidot),
            "band low": np.asarray(d.band_lo), "band high": np.asarray(d.band_hi)}


def write_report(directory, scenario: str, echo: str, results, trajectories=()) -> list:
    """report.md, measured.csv, checks.json and plots/*.svg under directory."""
    d = Path(directory)
    plots = d / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    for old in plots.glob("*.svg"):
        old.unlink()
    figs = []
    for label, traj in trajectories:
        curves = diagnostics_curves(traj)
        if curves:
            t = curves.pop("__t__")
            p = plots / f"diagnostics_{label}.svg"
            line_plot(p, t, curves, f"{scenario}: {label}")
            figs.append(p)
    for r in results:
        curves = _series(r.details)
        if curves:
            t = curves.pop("__t__")
            p = plots / f"check_{r.name}.svg"
            line_plot(p, t, curves, f"{scenario}: {r.name}", logx=True)
            figs.append(p)

    lines = [f"# Scenario {scenario}", "", "## Configuration", "", "```ini", echo.rstrip(), "```", "",
             "## Checks", "", "| check | status | measured constant | first violation (t, s) |",
             "|---|---|---|---|"]
    for r in results:
        t, s = _violation(r)
        where = f"({_num(t)}, {_num(s)})" if r.first_violation else ""
        lines.append(f"| {r.name} | {r.status} | {_num(r.measured_constant)} | {where} |")
    for r in results:
        msg = r.details.get("message") if isinstance(r.details, dict) else None
        if msg:
            lines += ["", f"{r.name}: {msg}"]
    lines += ["", "## Plots", ""]
    lines += [f"![{p.stem}](plots/{p.name})" for p in figs] or ["(none)"]
    (d / "report.md").write_text("\n".join(lines) + "\n")
    (d / "measured.csv").write_text(measured_csv(results))
    (d / "checks.json").write_text(results_to_json(results))
    return [d / "report.md", d / "measured.csv", d / "checks.json", *figs]
