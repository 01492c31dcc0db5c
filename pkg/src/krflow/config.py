"""Scenario files: INI sections ``[scenario NAME]`` with flat key = value pairs.

Grammar (one section per scenario; ``;`` and ``#`` start comments)::

    [scenario flat_homothety]
    background = flat              ; flat | complex_hyperbolic | kahler_einstein | tabulated
    n = 2
    k = -0.5                       ; complex_hyperbolic only
    background_file = h.csv        ; tabulated only, two columns (s, xi)
    grid = 1, 7, 512               ; s_min, s_max, N
    initial = homothety            ; homothety | bump | curvature_bump | rough | degenerate | tabulated
    c = 1.0                        ; homothety
    center = 0                     ; bump, curvature_bump, rough
    width = 1                      ; bump, rough
    amplitude = 0.3                ; bump, rough
    base = 1.5                     ; bump, curvature_bump, rough
    target = 100                   ; curvature_bump: sup |Rm(g0)|
    bands = 0.01, 0.05             ; rough: band distances of the mollified family
    plateau = -3.5, -2.5, 0.5      ; degenerate: p1, p2, tau
    initial_file = xi0.csv         ; tabulated initial data
    stepper = implicit_be
    t_end = 1
    dt = 1e-3
    cfl_theta = 0.5
    snapshot_times = 0.5, 1        ; or linspace(a, b, m) / geomspace(a, b, m)
    newton_tol = 1e-12
    newton_max_iters = 50
    boundary = pinned_model
    epsilon_list = 1e-1, 1e-2      ; required for degenerate data
    diagnostics = true
    checks = sandwich, prop1_lower
    check.sandwich.C2_const = 2    ; per-check parameters

Relative file names resolve against the directory of the scenario file.
"""

import configparser
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .background import Background
from .errors import ConfigError
from .flow import BOUNDARIES, STEPPERS, FlowConfig
from .grid import RadialGrid

INITIAL_KINDS = ("homothety", "bump", "curvature_bump", "rough", "degenerate", "tabulated")
BACKGROUNDS = ("flat", "complex_hyperbolic", "kahler_einstein", "tabulated")
KNOWN_CHECKS = (
    "sandwich", "prop1_lower", "curvature_decay", "schwarz_lower", "identities",
    "degenerate_bounds", "stability_flat", "stability_hyperbolic", "c0_attainment",
    "shrinking_ball", "claim_functionals",
)
_SECTION = re.compile(r"scenario\s+([A-Za-z0-9_.-]+)$")
_GENERATOR = re.compile(r"(linspace|geomspace)\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)$")
_BASE_KEYS = {
    "background", "n", "k", "background_file", "grid", "initial", "c", "center", "width",
    "amplitude", "base", "target", "bands", "plateau", "initial_file", "stepper", "t_end",
    "dt", "cfl_theta", "snapshot_times", "newton_tol", "newton_max_iters", "boundary",
    "epsilon_list", "diagnostics", "checks",
}


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    background: Background
    grid: RadialGrid
    initial: dict
    flow: FlowConfig
    checks: tuple
    check_params: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)
    line: int | None = None

    @property
    def kind(self) -> str:
        return self.initial["kind"]

    def echo(self) -> str:
        """The scenario's own key = value lines."""
        return "\n".join(f"{k} = {v}" for k, v in self.source.items())


class _Locator:
    """Maps (section, key) to the line where it was written."""

    def __init__(self, text: str):
        self.sections, self.keys = {}, {}
        current = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                self.sections.setdefault(current, lineno)
            elif current and "=" in line and not line.startswith((";", "#")):
                self.keys[(current, line.split("=", 1)[0].strip())] = lineno

    def of(self, section, key=None):
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section)


def _floats(text: str, field_name: str, line) -> list:
    text = text.strip()
    m = _GENERATOR.fullmatch(text)
    try:
        if m:
            a, b, count = float(m.group(2)), float(m.group(3)), int(m.group(4))
            fn = np.linspace if m.group(1) == "linspace" else np.geomspace
            return [float(x) for x in fn(a, b, count)]
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse numbers from {text!r}", line=line, field=field_name) from exc


def _value(text: str):
    low = text.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "inf"):
        return None if low == "none" else math.inf
    try:
        return int(low)
    except ValueError:
        pass
    try:
        return float(low)
    except ValueError:
        return text.strip()


def _scenario(name, sec, loc, section, base_dir) -> Scenario:
    def line(key=None):
        return loc.of(section, key)

    def get(key, default=None, required=False):
        if key in sec:
            return sec[key]
        if required:
            raise ConfigError(f"scenario {name}: missing '{key}'", line=line(), field=key)
        return default

    def num(key, default=None, required=False, cast=float):
        raw = get(key, None, required)
        if raw is None:
            return default
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"scenario {name}: '{key}' is not a number", line=line(key), field=key) from exc

    def path(key):
        p = Path(get(key, required=True))
        p = p if p.is_absolute() else base_dir / p
        if not p.exists():
            raise ConfigError(f"scenario {name}: file {p} does not exist", line=line(key), field=key)
        return p

    unknown = [k for k in sec if k not in _BASE_KEYS and not k.startswith("check.")]
    if unknown:
        raise ConfigError(f"scenario {name}: unknown key '{unknown[0]}'", line=line(unknown[0]), field=unknown[0])

    # background
    kind = get("background", required=True)
    n = num("n", 2, cast=int)
    try:
        if kind == "flat":
            bg = Background.flat(n)
        elif kind == "kahler_einstein":
            bg = Background.kahler_einstein(n)
        elif kind == "complex_hyperbolic":
            bg = Background.complex_hyperbolic(n, num("k", required=True))
        elif kind == "tabulated":
            from .tables import read_two_column

            p = path("background_file")
            s, xi = read_two_column(p)
            bg = Background.tabulated(n, s, xi, source=str(p))
        else:
            raise ConfigError(f"scenario {name}: background must be one of {BACKGROUNDS}",
                              line=line("background"), field="background")
    except ValueError as exc:
        raise ConfigError(f"scenario {name}: {exc}", line=line("background"), field="background") from exc

    g = _floats(get("grid", required=True), "grid", line("grid"))
    if len(g) != 3:
        raise ConfigError(f"scenario {name}: grid needs s_min, s_max, N", line=line("grid"), field="grid")
    try:
        grid = RadialGrid(g[0], g[1], int(g[2]))
    except ValueError as exc:
        raise ConfigError(f"scenario {name}: {exc}", line=line("grid"), field="grid") from exc

    # initial data
    ik = get("initial", required=True)
    if ik not in INITIAL_KINDS:
        raise ConfigError(f"scenario {name}: initial must be one of {INITIAL_KINDS}",
                          line=line("initial"), field="initial")
    initial = {"kind": ik}
    if ik == "homothety":
        initial["c"] = num("c", 1.0)
    elif ik == "bump":
        initial.update(center=num("center", 0.0), width=num("width", required=True),
                       amplitude=num("amplitude", required=True), base=num("base", 1.0))
    elif ik == "curvature_bump":
        initial.update(target=num("target", required=True), center=num("center", 0.0),
                       base=num("base", 1.5))
    elif ik == "rough":
        initial.update(center=num("center", 0.0), width=num("width", required=True),
                       amplitude=num("amplitude", required=True), base=num("base", 1.5),
                       bands=tuple(_floats(get("bands", required=True), "bands", line("bands"))))
    elif ik == "degenerate":
        pl = _floats(get("plateau", required=True), "plateau", line("plateau"))
        if len(pl) != 3:
            raise ConfigError(f"scenario {name}: plateau needs p1, p2, tau", line=line("plateau"), field="plateau")
        initial.update(p1=pl[0], p2=pl[1], tau=pl[2])
    else:
        initial["file"] = str(path("initial_file"))

    # flow
    eps = get("epsilon_list")
    eps = tuple(_floats(eps, "epsilon_list", line("epsilon_list"))) if eps else None
    if ik == "degenerate" and eps is None:
        raise ConfigError(f"scenario {name}: degenerate initial data require a regularization family "
                          "(epsilon_list)", line=line("initial"), field="epsilon_list")
    stepper = get("stepper", "implicit_be")
    boundary = get("boundary", "pinned_model")
    for key, val, allowed in (("stepper", stepper, STEPPERS), ("boundary", boundary, BOUNDARIES)):
        if val not in allowed:
            raise ConfigError(f"scenario {name}: {key} must be one of {allowed}", line=line(key), field=key)
    snaps = get("snapshot_times")
    try:
        flow = FlowConfig(
            stepper=stepper,
            t_end=num("t_end", required=True),
            dt=num("dt"),
            cfl_theta=num("cfl_theta", 0.5),
            snapshot_times=tuple(_floats(snaps, "snapshot_times", line("snapshot_times"))) if snaps else (),
            newton_tol=num("newton_tol", 1e-12),
            newton_max_iters=num("newton_max_iters", 50, cast=int),
            boundary=boundary,
            epsilon_list=eps,
            diagnostics=_value(get("diagnostics", "true")) is True,
        )
    except ValueError as exc:
        raise ConfigError(f"scenario {name}: {exc}", line=line(), field="flow") from exc

    # checks
    checks = tuple(c.strip() for c in get("checks", "").split(",") if c.strip())
    for c in checks:
        if c not in KNOWN_CHECKS:
            raise ConfigError(f"scenario {name}: unknown check '{c}'", line=line("checks"), field="checks")
    if len(set(checks)) != len(checks):
        raise ConfigError(f"scenario {name}: duplicate check", line=line("checks"), field="checks")
    params = {}
    for key, raw in sec.items():
        if key.startswith("check."):
            parts = key.split(".")
            if len(parts) != 3 or parts[1] not in checks:
                raise ConfigError(f"scenario {name}: '{key}' does not name a listed check",
                                  line=line(key), field=key)
            params.setdefault(parts[1], {})[parts[2]] = _value(raw)
    if "c0_attainment" in checks and ik != "rough":
        raise ConfigError(f"scenario {name}: c0_attainment needs rough initial data",
                          line=line("checks"), field="checks")
    if "degenerate_bounds" in checks and eps is None:
        raise ConfigError(f"scenario {name}: degenerate_bounds needs epsilon_list",
                          line=line("checks"), field="checks")
    return Scenario(name, bg, grid, initial, flow, checks, params, dict(sec), line())


def parse_config(text: str, base_dir=".") -> list:
    """Scenarios defined in an INI text, in file order."""
    loc = _Locator(text)
    seen = {}
    for section, lineno in _section_lines(text):
        m = _SECTION.fullmatch(section)
        if not m:
            raise ConfigError(f"section [{section}] is not of the form [scenario NAME]", line=lineno)
        if m.group(1) in seen:
            raise ConfigError(f"duplicate scenario name '{m.group(1)}'", line=lineno, field="name")
        seen[m.group(1)] = lineno
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str  # check parameters are case sensitive (K vs k)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc.message if hasattr(exc, 'message') else exc}",
                          line=getattr(exc, "lineno", None)) from exc
    if not parser.sections():
        raise ConfigError("no [scenario NAME] sections found", line=1)
    out = []
    for section in parser.sections():
        name = _SECTION.fullmatch(section).group(1)
        out.append(_scenario(name, dict(parser[section]), loc, section, Path(base_dir)))
    return out


def _section_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            yield line[1:-1].strip(), lineno


def builtin_text() -> str:
    return resources.files("krflow").joinpath("scenarios.ini").read_text()


def builtin_names() -> list:
    return [_SECTION.fullmatch(s).group(1) for s, _ in _section_lines(builtin_text())]


def load_scenarios(spec: str) -> list:
    """Scenarios from a file path, or a built-in scenario by name."""
    p = Path(spec)
    if p.exists():
        return parse_config(p.read_text(), p.parent)
    if spec in builtin_names():
        return [s for s in parse_config(builtin_text()) if s.name == spec]
    raise ConfigError(f"no scenario file or built-in scenario named '{spec}'", field="config")
