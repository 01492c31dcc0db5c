"""Command line entry point.

Exit codes: 0 all checks pass or were measured, 1 some check failed,
2 numerical failure, 3 configuration or argument error.
"""

import argparse
import configparser
import os
import sys
from pathlib import Path

from . import barriers, schedule, suite
from .config import _value, load_scenarios, parse_config
from .errors import ConfigError, KrflowError, NumericalFailure, RangeError
from .report import results_from_json, write_report
from .tables import fmt

EXIT_OK, EXIT_FAIL, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2, 3
DEFAULT_OUT = "krflow_out"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message, field="argv")


def _out_dir(args, default=None) -> Path:
    out = args.out or os.environ.get("KRFLOW_OUT") or default or DEFAULT_OUT
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _table(rows, headers) -> str:
    cells = [list(map(str, headers))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


def _csv(path, headers, rows) -> None:
    lines = [",".join(headers)] + [",".join(str(c) for c in r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _status_code(results) -> int:
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


def _print_results(name, results) -> None:
    for r in results:
        mc = "" if r.measured_constant is None else f" constant={fmt(r.measured_constant)}"
        print(f"{name}: {r.name} {r.status}{mc}")


def _trajectories(result: suite.RunResult):
    if result.kind == "single":
        return [("trajectory", result.trajectory)]
    if result.kind == "family":
        return [(f"eps_{fmt(e)}", tr) for e, tr in zip(result.family.epsilons, result.family.trajectories)]
    return [(f"d_{fmt(d)}", tr) for d, tr in result.runs]


# subcommands -------------------------------------------------------------------

def cmd_run(args) -> int:
    scenarios = load_scenarios(args.config)
    if args.scenario:
        scenarios = [s for s in scenarios if s.name in args.scenario]
        if not scenarios:
            raise ConfigError(f"no scenario named {args.scenario}", field="scenario")
    out = _out_dir(args)
    code = EXIT_OK
    for sc in scenarios:
        d = out / sc.name
        result = suite.execute(sc)
        suite.persist(result, d)
        (d / "scenario.ini").write_text(f"[scenario {sc.name}]\n{sc.echo()}\n")
        results = suite.run_checks(result, sc.checks, sc.check_params)
        write_report(d, sc.name, sc.echo(), results, _trajectories(result))
        _print_results(sc.name, results)
        print(f"{sc.name}: wrote {d}")
        code = max(code, _status_code(results))
    return code


def _read_constants(path) -> dict:
    """INI file with one section per check: [sandwich] C2_const = 2."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(Path(path).read_text())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read constants file {path}: {exc}", field="constants") from exc
    return {sec: {k: _value(v) for k, v in cp[sec].items()} for sec in cp.sections()}


def cmd_verify(args) -> int:
    src = Path(args.directory)
    if not src.exists():
        raise ConfigError(f"{src} does not exist", field="directory")
    checks, params, echo, name = (), {}, "", src.name
    stored = src / "scenario.ini"
    if stored.exists():
        sc = parse_config(stored.read_text(), src)[0]
        checks, params, echo, name = sc.checks, {k: dict(v) for k, v in sc.check_params.items()}, sc.echo(), sc.name
    if args.checks:
        checks = tuple(c.strip() for c in args.checks.split(",") if c.strip())
    if not checks:
        raise ConfigError("no checks requested", field="checks")
    if args.constants:
        for check, vals in _read_constants(args.constants).items():
            params.setdefault(check, {}).update(vals)
    try:
        result = suite.load(src)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc), field="directory") from exc
    results = suite.run_checks(result, checks, params)
    out = _out_dir(args, default=src)
    write_report(out, name, echo or f"checks = {', '.join(checks)}", results, _trajectories(result))
    _print_results(name, results)
    return _status_code(results)


def cmd_report(args) -> int:
    src = Path(args.directory)
    stored = src / "checks.json"
    if not stored.exists():
        raise ConfigError(f"{stored} does not exist; run or verify first", field="directory")
    results = results_from_json(stored.read_text())
    echo, name = "", src.name
    if (src / "scenario.ini").exists():
        sc = parse_config((src / "scenario.ini").read_text(), src)[0]
        echo, name = sc.echo(), sc.name
    try:
        trajs = _trajectories(suite.load(src))
    except FileNotFoundError:
        trajs = []
    out = _out_dir(args, default=src)
    write_report(out, name, echo, results, trajs)
    print(f"{name}: report written to {out / 'report.md'}")
    return _status_code(results)


_PRIMITIVES = ("n", "C0", "c1", "alpha", "beta_n", "b", "C1_curv", "B", "K", "T_tilde", "T_hat")


def _ledger_from(args):
    kw = {k: getattr(args, k) for k in _PRIMITIVES if getattr(args, k) is not None}
    return schedule.derive(args.lam, **kw)


def cmd_ledger(args) -> int:
    led = _ledger_from(args)
    rows = [(name, fmt(float(v)), formula) for name, v, formula in led.rows()]
    print(_table(rows, ("name", "value", "formula")))
    _csv(_out_dir(args) / "ledger.csv", ("name", "value", "formula"),
         [(a, b, f'"{c}"') for a, b, c in rows])
    return EXIT_OK


def cmd_schedule(args) -> int:
    led = None
    if args.mu is None:
        led = _ledger_from(args)
    sch = schedule.build_schedule(led, t0=args.t0, R=args.R, mu=args.mu, Lambda=args.Lambda,
                                  sigma=args.sigma)
    rows = [(k, fmt(t), fmt(r)) for k, (t, r) in enumerate(zip(sch.t, sch.R_k))]
    out = _out_dir(args)
    _csv(out / "schedule.csv", ("k", "t_k", "R_k"), rows)
    shown = rows if len(rows) <= 12 else rows[:5] + [("...", "...", "...")] + rows[-5:]
    print(_table(shown, ("k", "t_k", "R_k")))
    var = sch.variants()
    vrows = [(k, fmt(float(v)) if not isinstance(v, bool) else str(v)) for k, v in var.items()]
    vrows += [("k_max", sch.k_max), ("terminal_time", fmt(sch.terminal_time))]
    print()
    print(_table(vrows, ("quantity", "value")))
    _csv(out / "schedule_variants.csv", ("quantity", "value"), vrows)
    return EXIT_OK


def cmd_barriers(args) -> int:
    out = _out_dir(args)
    rows = []
    for kappa in args.kappa:
        fam = barriers.build_cutoff(kappa, args.samples)
        b = barriers.b_of_kappa(fam, args.samples)
        tab = barriers.cutoff_table(fam)
        cols = ("s", "f", "phi_bump", "frakF", "weighted_sum")
        _csv(out / f"barriers_kappa_{kappa:g}.csv", cols,
             [tuple(fmt(float(tab[c][i])) for c in cols) for i in range(len(tab["s"]))])
        rows.append((fmt(kappa), fmt(b)))
    print(_table(rows, ("kappa", "b(kappa)")))
    _csv(out / "barriers_b.csv", ("kappa", "b"), rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="krflow", description="Radial Kahler-Ricci flow lab.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_out(sp):
        sp.add_argument("--out", help="output directory (overrides KRFLOW_OUT)")
        return sp

    r = with_out(sub.add_parser("run", help="run scenarios and their checks"))
    r.add_argument("--config", required=True, help="scenario file or built-in scenario name")
    r.add_argument("--scenario", action="append", help="restrict to these scenario names")
    r.set_defaults(func=cmd_run)

    v = with_out(sub.add_parser("verify", help="check a stored trajectory directory"))
    v.add_argument("directory")
    v.add_argument("--checks", help="comma separated check names")
    v.add_argument("--constants", help="INI file, one section per check")
    v.set_defaults(func=cmd_verify)

    rp = with_out(sub.add_parser("report", help="rebuild report and plots from stored results"))
    rp.add_argument("directory")
    rp.set_defaults(func=cmd_report)

    def with_primitives(sp):
        sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
        sp.add_argument("--n", type=int)
        for k in _PRIMITIVES[1:]:
            sp.add_argument(f"--{k}", type=float)
        return sp

    lg = with_out(with_primitives(sub.add_parser("ledger", help="derived constants table")))
    lg.set_defaults(func=cmd_ledger)

    sc = with_out(with_primitives(sub.add_parser("schedule", help="doubling schedule t_k, R_k")))
    sc.add_argument("--mu", type=float)
    sc.add_argument("--Lambda", type=float)
    sc.add_argument("--sigma", type=float)
    sc.add_argument("--t0", type=float, default=1e-4)
    sc.add_argument("--R", type=float, default=10.0)
    sc.set_defaults(func=cmd_schedule)

    b = with_out(sub.add_parser("barriers", help="cutoff table and b(kappa)"))
    b.add_argument("--kappa", type=float, action="append", required=True)
    b.add_argument("--samples", type=int, default=barriers.DEFAULT_SAMPLES)
    b.set_defaults(func=cmd_barriers)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        t = getattr(exc, "t", None)
        when = f" at t={fmt(t)}" if t is not None else ""
        print(f"numerical failure{when}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RangeError, KrflowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
