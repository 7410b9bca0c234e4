"""Command-line front end: ``pareto-consensus {run,sweep,verify-matrix,verify-bounds,fixtures}``.

Every CSV starts with a ``#`` metadata block (tool version, scenario, resolved
defaults, eta_A) and contains no timestamps, so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .engine import pareto_sweep, run, weighted_problem
from .errors import ConfigError, ParetoConsensusError
from .objectives import oracle_minimizer
from .scenario import (
    BUILTIN_PREFIX,
    Scenario,
    builtin_names,
    builtin_text,
    load_scenario,
    read_priorities_csv,
)
from .verify import bound_checks, bound_series, verify_matrix

TRAJ_FMT = ".17g"
SUMMARY_FMT = ".6g"


def _fmt(v, spec):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), spec)
    return "" if v is None else str(v)


def metadata_lines(meta: dict) -> list[str]:
    out = [f"# pareto-consensus {__version__}"]
    for key, value in meta.items():
        # shortest round-trip repr keeps the header readable and exact
        text = repr(float(value)) if isinstance(value, (float, np.floating)) else _fmt(value, "")
        out.append(f"# {key}: {'none' if value is None else text}")
    return out


def write_csv(path, meta: dict, header: list[str], rows, spec: str) -> None:
    lines = metadata_lines(meta)
    lines.append(",".join(header))
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} fields, header declares {len(header)}")
        lines.append(",".join(_fmt(v, spec) for v in row))
    text = "\n".join(lines) + "\n"
    if str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _agent_coord_cols(prefix, n, m):
    return [f"{prefix}_{i}_{p}" for i in range(1, n + 1) for p in range(1, m + 1)]


def summary_table(sc: Scenario, result, xstar) -> tuple[list[str], list]:
    """Header and the single row of the results-table schema, plus the final iterate."""
    cfg = sc.config
    n, m = cfg.n, cfg.dim
    problem = weighted_problem(cfg, result.wbar)
    header = ([f"wbar_{j}" for j in range(1, n + 1)] + [f"xstar_{p}" for p in range(1, m + 1)]
              + _agent_coord_cols("xhat", n, m) + ["F_xstar"] + [f"F_xhat_{i}" for i in range(1, n + 1)]
              + _agent_coord_cols("xlast", n, m) + [f"F_xlast_{i}" for i in range(1, n + 1)])
    row = (list(result.wbar) + list(xstar) + list(result.xhat.ravel()) + [problem.value(xstar)]
           + [problem.value(x) for x in result.xhat] + list(result.x_final.ravel())
           + [problem.value(x) for x in result.x_final])
    return header, row


def _oracle(cfg, wbar):
    return oracle_minimizer(weighted_problem(cfg, wbar), x0=np.asarray(cfg.x0, dtype=float).mean(axis=0))


def _summary_path(out: str) -> str:
    if out == "-":
        return "-"
    p = Path(out)
    return str(p.with_name(p.stem + ".summary" + (p.suffix or ".csv")))


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario, seed=args.seed)
    cfg = sc.config
    result = run(cfg)
    xstar = _oracle(cfg, result.wbar)
    f_star = weighted_problem(cfg, result.wbar).value(xstar)
    gaps = result.objective_series - f_star
    header = ["k", "gap_max", "gap_mean"] + _agent_coord_cols("xhat", cfg.n, cfg.dim)
    rows = ([int(k), g.max(), g.mean(), *xh.ravel()]
            for k, g, xh in zip(result.ks, gaps, result.xhat_series))
    meta = dict(sc.metadata, f_star=f_star)
    write_csv(args.out, meta, header, rows, TRAJ_FMT)
    s_header, s_row = summary_table(sc, result, xstar)
    write_csv(_summary_path(args.out), sc.metadata, s_header, [s_row], SUMMARY_FMT)
    return 0


def _priorities_text(spec: str) -> str:
    if spec == f"{BUILTIN_PREFIX}settings":
        return resources.files(__package__).joinpath("scenarios", "priority_settings.csv").read_text()
    try:
        return Path(spec).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read priorities file {spec}: {e.strerror}") from None


def cmd_sweep(args) -> int:
    sc = load_scenario(args.scenario, seed=args.seed)
    cfg = sc.config
    settings = read_priorities_csv(_priorities_text(args.priorities), cfg.n)
    labels = [s for s, _ in settings]
    points = pareto_sweep(cfg, [W for _, W in settings])
    n = cfg.n
    header = (["setting"] + [f"wbar_{j}" for j in range(1, n + 1)]
              + [f"f_{j}" for j in range(1, n + 1)] + ["weighted", "eta_A"])
    rows = ([labels[p.index], *p.wbar, *p.values, p.weighted, p.result.eta] for p in points)
    meta = dict(sc.metadata, initial_priorities=args.priorities, settings=len(settings),
                eta_A="per setting, see column eta_A")
    write_csv(args.out, meta, header, rows, SUMMARY_FMT)
    return 0


def _print_checks(checks) -> int:
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed and not c.informational]
    print(f"{len(checks) - len(failed)} passed, {len(failed)} failed")
    return 1 if failed else 0


def cmd_verify_matrix(args) -> int:
    sc = load_scenario(args.scenario, seed=args.seed)
    return _print_checks(verify_matrix(sc.config))


def cmd_verify_bounds(args) -> int:
    sc = load_scenario(args.scenario, seed=args.seed)
    series = bound_series(replace(sc.config, track_phi=False))
    if args.out:
        header = ["k", "gap_max", "bound", "asymptote"]
        rows = ([int(k), g.max(), b, series.asymptote]
                for k, g, b in zip(series.ks, series.gaps, series.bound))
        write_csv(args.out, dict(sc.metadata, f_star=series.f_star, L=series.report.L), header, rows, TRAJ_FMT)
    return _print_checks(bound_checks(series))


FIXTURE_NOTES = {
    "scenario1": "two agents, one variable, priority setting 1",
    "scenario2": "twenty agents, ten variables, uniform priorities",
}


def cmd_fixtures(args) -> int:
    if args.action == "list":
        for name in builtin_names():
            base, _, row = name.partition("-row")
            note = f"two agents, one variable, priority setting {row}" if row else FIXTURE_NOTES[base]
            print(f"{BUILTIN_PREFIX}{name}\t{note}")
        print(f"{BUILTIN_PREFIX}settings\tthe 20 priority settings (for sweep --priorities)")
        return 0
    if args.name == "settings":
        sys.stdout.write(_priorities_text(f"{BUILTIN_PREFIX}settings"))
    else:
        sys.stdout.write(builtin_text(args.name))
    return 0


def _set_threads(n: int | None) -> None:
    # the kernel is serial with a fixed reduction order, so this only caps the pool
    if n is None:
        return
    if n < 1:
        raise ConfigError(f"--threads must be >= 1, got {n}")
    import numba

    with warnings.catch_warnings():
        # an old system TBB only makes numba fall back to another threading layer
        warnings.filterwarnings("ignore", message=".*TBB", category=numba.NumbaWarning)
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pareto-consensus", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="scenario file, or builtin:NAME (see 'fixtures list')")
    common.add_argument("--seed", type=int, default=None,
                        help="seed for the random topology generator; ignored by other topologies")
    common.add_argument("--threads", type=int, default=None, help="thread cap; never changes results")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="one run: trajectory CSV plus a summary CSV")
    p.add_argument("--out", required=True, help="trajectory CSV path ('-' for stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="one run per priority setting, front CSV")
    p.add_argument("--priorities", required=True, help="priorities CSV, or builtin:settings")
    p.add_argument("--out", required=True, help="front CSV path ('-' for stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-matrix", parents=[common], help="PASS/FAIL audit of the run's guarantees")
    p.set_defaults(func=cmd_verify_matrix)

    p = sub.add_parser("verify-bounds", parents=[common], help="observed gap against the performance bound")
    p.add_argument("--out", default=None, help="optional CSV of k, gap_max, bound, asymptote")
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("fixtures", help="list or print the shipped scenarios")
    fx = p.add_subparsers(dest="action", required=True)
    fx.add_parser("list")
    show = fx.add_parser("show")
    show.add_argument("name", help="a name from 'fixtures list' without the builtin: prefix")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _set_threads(getattr(args, "threads", None))
        return args.func(args)
    except ParetoConsensusError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
