"""Scenario execution, persistence and check dispatch."""

import math
from dataclasses import dataclass
from pathlib import Path

from . import harness
from . import initial_data as idt
from .config import Scenario
from .errors import ConfigError, KrflowError, NumericalFailure
from .flow import FamilyResult, run
from .geometry import c0_distance
from .tables import fmt, read_trajectory, state_from_snapshot, write_snapshot, write_trajectory


@dataclass(frozen=True, eq=False)
class RunResult:
    """kind is "single", "family" (epsilon runs) or "rough" (mollified runs)."""

    kind: str
    trajectory: object = None
    family: FamilyResult | None = None
    runs: tuple = ()
    reference: object = None

    @property
    def primary(self):
        """The trajectory single-trajectory checks look at."""
        if self.kind == "single":
            return self.trajectory
        if self.kind == "family":
            return self.family.trajectories[-1]
        return self.runs[0][1]


def build_initial(sc: Scenario):
    """MetricState for the scenario, or (reference, [(d, state)]) for rough data."""
    ini, g, bg = sc.initial, sc.grid, sc.background
    kind = ini["kind"]
    if kind == "homothety":
        return idt.homothety(g, bg, ini["c"])
    if kind == "bump":
        return idt.bump(g, bg, ini["center"], ini["width"], ini["amplitude"], ini["base"])
    if kind == "curvature_bump":
        return idt.curvature_bump(g, bg, ini["target"], ini["center"], ini["base"])
    if kind == "degenerate":
        return idt.plateau(g, bg, ini["p1"], ini["p2"], ini["tau"])
    if kind == "tabulated":
        return idt.tabulated(g, bg, ini["file"])
    members, ref = [], None
    for d in ini["bands"]:
        st, ref, _ = idt.mollified_kink_for_band(g, bg, d, ini["center"], ini["width"],
                                                 ini["amplitude"], ini["base"])
        members.append((d, st))
    return ref, members


def execute(sc: Scenario) -> RunResult:
    init = build_initial(sc)
    if sc.kind == "rough":
        ref, members = init
        return RunResult("rough", runs=tuple((d, run(st, sc.flow)) for d, st in members), reference=ref)
    out = run(init, sc.flow)
    if isinstance(out, FamilyResult):
        return RunResult("family", family=out)
    return RunResult("single", trajectory=out)


# persistence -------------------------------------------------------------------

def persist(result: RunResult, directory) -> list:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    if result.kind == "single":
        return write_trajectory(d / "trajectory", result.trajectory)
    paths = []
    if result.kind == "family":
        write_snapshot(d / "base.csv", result.family.base)
        paths.append(d / "base.csv")
        for eps, tr in zip(result.family.epsilons, result.family.trajectories):
            paths += write_trajectory(d / f"eps_{fmt(eps)}", tr)
        return paths
    write_snapshot(d / "reference.csv", result.reference)
    paths.append(d / "reference.csv")
    for band, tr in result.runs:
        paths += write_trajectory(d / f"d_{fmt(band)}", tr)
    return paths


def load(directory) -> RunResult:
    d = Path(directory)
    if (d / "trajectory").is_dir():
        return RunResult("single", trajectory=read_trajectory(d / "trajectory"))
    if (d / "base.csv").exists():
        base, _ = state_from_snapshot(d / "base.csv")
        members = sorted(((float(p.name[4:]), p) for p in d.glob("eps_*")), reverse=True)
        trajs = tuple(read_trajectory(p) for _, p in members)
        eps = tuple(e for e, _ in members)
        mask = base.grid.collar_mask()
        dist = {}
        for i in range(len(eps)):
            for j in range(i + 1, len(eps)):
                dist[(eps[i], eps[j])] = [(a.t, c0_distance(a, b, mask))
                                          for a, b in zip(trajs[i].states, trajs[j].states)]
        return RunResult("family", family=FamilyResult(base, eps, trajs, dist))
    if (d / "reference.csv").exists():
        ref, _ = state_from_snapshot(d / "reference.csv")
        runs = sorted((float(p.name[2:]), read_trajectory(p)) for p in d.glob("d_*"))
        return RunResult("rough", runs=tuple(runs), reference=ref)
    if any(d.glob("snap_*.csv")):
        return RunResult("single", trajectory=read_trajectory(d))
    raise FileNotFoundError(f"{directory} holds no trajectory")


# checks ----------------------------------------------------------------------------

def run_check(name: str, result: RunResult, params: dict | None = None) -> harness.CheckResult:
    """Dispatch one named check; hypothesis failures come back as failing results."""
    p = dict(params or {})
    try:
        if name == "degenerate_bounds":
            if result.kind != "family":
                raise ConfigError("degenerate_bounds needs an epsilon family", field="checks")
            if "beta" not in p:
                raise ConfigError("degenerate_bounds needs check.degenerate_bounds.beta", field="beta")
            s_h = p.pop("s_horizon", 2.0 * float(result.primary.times[-1]))
            return harness.check_degenerate_bounds(result.family, s_h, p.pop("beta"), **p)
        if name == "c0_attainment":
            if result.kind != "rough":
                raise ConfigError("c0_attainment needs rough initial data", field="checks")
            return harness.check_c0_attainment(list(result.runs), result.reference, **p)
        if name == "claim_functionals":
            lam = p.pop("lam", p.pop("lambda", 1.0))
            return harness.evaluate_claim_functionals(result.primary, lam, **p)
        if name not in harness.CHECKS:
            raise ConfigError(f"unknown check '{name}'", field="checks")
        return harness.CHECKS[name](result.primary, **p)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for check {name}: {exc}", field=name) from exc
    except (ConfigError, NumericalFailure):
        raise
    except KrflowError as exc:
        where = (math.nan, float(getattr(exc, "s", None) or math.nan))
        return harness.CheckResult(name, harness.FAIL, None, where,
                                   {"error": type(exc).__name__, "message": str(exc)})


def run_checks(result: RunResult, checks, params: dict | None = None) -> list:
    params = params or {}
    return [run_check(c, result, params.get(c)) for c in checks]
