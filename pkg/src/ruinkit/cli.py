"""Command-line front end: ``ruinkit <subcommand> [options]``.

Parameters start from the worked example (mu=0.06, r=0.02, sigma=0.2,
lambda=0.04, c=1, x=0, M=-200), are overridden by ``--config FILE`` and then
by individual flags. Tables go to stdout (or ``--output``) as CSV with 10
significant digits, or as JSON.

Exit status: 0 success, 2 usage error, 3 invalid parameters or domain,
4 solver or numerical failure. Errors are one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import lifetime_ruin, no_borrow, ruin_at_death, shortfall, shortfall_at_death
from .errors import (
    ConfigError,
    DomainError,
    NumericalError,
    ParameterError,
    RuinkitError,
    SolverError,
)
from .market import (
    EXAMPLE_PARAMS,
    NegativeWealthMode,
    ProblemSpec,
    parse_config,
    spec_from_mapping,
)
from .strategy import load_strategy_csv

EXIT_USAGE = 2
EXIT_SPEC = 3
EXIT_SOLVER = 4

CRITERIA = {
    "lifetime-ruin": "lifetime-ruin",
    "psi": "lifetime-ruin",
    "ruin-at-death": "ruin-at-death",
    "phi": "ruin-at-death",
    "shortfall": "shortfall",
    "V": "shortfall",
    "shortfall-at-death": "shortfall-at-death",
    "U": "shortfall-at-death",
}

DEFAULTS = {
    "mu": EXAMPLE_PARAMS.mu,
    "r": EXAMPLE_PARAMS.r,
    "sigma": EXAMPLE_PARAMS.sigma,
    "lambda": EXAMPLE_PARAMS.lam,
    "c": EXAMPLE_PARAMS.c,
    "x": 0.0,
    "M": -200.0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def fmt(value) -> str:
    """10 significant digits, dot decimal separator, independent of locale."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".10g")


def _round(value):
    if isinstance(value, float) and math.isfinite(value):
        return float(format(value, ".10g"))
    return value


def write_table(out, header, rows, fmt_name="csv"):
    if fmt_name == "json":
        records = [{h: _round(float(v)) for h, v in zip(header, row)} for row in rows]
        out.write(json.dumps(records, allow_nan=True) + "\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def write_record(out, record: dict, fmt_name="json"):
    if fmt_name == "csv":
        write_table(out, list(record), [list(record.values())], "csv")
        return
    clean = {k: _round(v) for k, v in record.items()}
    out.write(json.dumps(clean, allow_nan=True) + "\n")


# -- argument plumbing ----------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("problem specification")
    g.add_argument("--config", help="flat key = value file (mu, r, sigma, lambda, c, x, M, mode)")
    g.add_argument("--mu", type=float)
    g.add_argument("--r", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--c", type=float)
    g.add_argument("--x", type=float, help="ruin / shortfall reference level")
    g.add_argument("--M", type=float, help="lower absorbing level for the at-death criteria")
    g.add_argument("--mode", choices=["welfare", "borrow"], help="negative-wealth convention")
    o = p.add_argument_group("output")
    o.add_argument("--output", "-o", help="write to this file instead of stdout")
    o.add_argument("--format", choices=["csv", "json"], default=None)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="ruinkit", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("params", parents=[common], help="print the derived constants")

    v = sub.add_parser("value", parents=[common], help="value function at (w, m)")
    v.add_argument("--criterion", required=True, choices=sorted(CRITERIA))
    v.add_argument("--w", type=float, required=True)
    v.add_argument("--m", type=float, help="running minimum (default: w)")
    v.add_argument(
        "--no-borrow", action="store_true", help="forbid borrowing (lifetime-ruin, shortfall)"
    )

    s = sub.add_parser("strategy", parents=[common], help="optimal allocation over a grid")
    s.add_argument("--criterion", required=True, choices=sorted(CRITERIA))
    s.add_argument("--no-borrow", action="store_true")
    s.add_argument("--w-min", type=float, help="default: M (at-death criteria) or x - 50")
    s.add_argument("--w-max", type=float, default=49.5)
    s.add_argument("--step", type=float, default=0.5)

    f = sub.add_parser(
        "figure1",
        parents=[common],
        help="pi_phi and pi_psi on [M, 49.5] in steps of 0.5, plus samples at x -/+ 1e-6",
    )
    f.add_argument("--w-min", type=float)
    f.add_argument("--w-max", type=float, default=49.5)
    f.add_argument("--step", type=float, default=0.5)
    f.add_argument("--eps", type=float, default=1e-6, help="offset of the one-sided samples")

    m = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate of a criterion")
    m.add_argument("--criterion", required=True, choices=sorted(CRITERIA))
    m.add_argument("--w", type=float, required=True)
    m.add_argument("--m", type=float)
    m.add_argument("--paths", type=int, default=200_000)
    m.add_argument("--dt", type=float, default=1.0 / 250.0)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--strategy", choices=["psi", "phi", "U", "nb", "file"], default=None)
    m.add_argument("--strategy-file", help="two-column CSV (w, pi) for --strategy file")
    m.add_argument("--antithetic", action="store_true")
    m.add_argument("--no-exact", action="store_true", help="Euler steps even for linear controls")

    w = sub.add_parser("sweep", parents=[common], help="value function over a w x m grid")
    w.add_argument("--criterion", required=True, choices=sorted(CRITERIA))
    w.add_argument("--no-borrow", action="store_true")
    w.add_argument("--w-min", type=float, required=True)
    w.add_argument("--w-max", type=float, required=True)
    w.add_argument("--w-step", type=float, default=1.0)
    w.add_argument("--m-min", type=float, help="with --m-max: full grid, else m = w")
    w.add_argument("--m-max", type=float)
    w.add_argument("--m-step", type=float, default=1.0)
    return parser


def resolve_spec(args) -> ProblemSpec:
    values = dict(DEFAULTS)
    explicit = set()
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc.strerror}") from None
        values.update(cfg)
        explicit.update(cfg)
    flags = {"mu": args.mu, "r": args.r, "sigma": args.sigma, "lambda": args.lam, "c": args.c}
    flags.update(x=args.x, M=args.M)
    flags = {k: v for k, v in flags.items() if v is not None}
    values.update(flags)
    explicit.update(flags)
    if args.mode is not None:
        values["mode"] = NegativeWealthMode.parse(args.mode)
    if "M" not in explicit and values["M"] >= values["x"]:
        values["M"] = None  # the default M only applies below the default-range x
    return spec_from_mapping(values)


def _grid(lo, hi, step):
    if not step > 0:
        raise ConfigError(f"grid step must be positive, got {step}")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [lo + i * step for i in range(n + 1)]


# -- subcommands --------------------------------------------------------------------


def cmd_params(args, spec, out):
    k = spec.consts
    record = {"safe": k.safe, **{f: getattr(k, f) for f in ("delta", "p", "B1", "B2", "xi")}}
    record["w_l"] = k.w_l
    if (args.format or "csv") == "json":
        write_record(out, record, "json")
    else:
        write_table(out, ["name", "value"], [[n, v] for n, v in record.items()])


def _solver(spec, criterion):
    if criterion == "ruin-at-death":
        return ruin_at_death.solve_ruin_at_death(spec)
    if criterion == "shortfall-at-death":
        return shortfall_at_death.solve_U(spec)
    return None


def evaluate(spec, criterion, w, m, no_borrow_flag=False, sol=None):
    if no_borrow_flag:
        if criterion == "lifetime-ruin":
            return no_borrow.psi_nb(sol or no_borrow.solve_psi_nb(spec), w, m)
        if criterion == "shortfall":
            return no_borrow.value_shortfall_nb(spec, w, m)
        raise ConfigError(
            f"--no-borrow is available for lifetime-ruin and shortfall, not {criterion}"
        )
    if criterion == "lifetime-ruin":
        return lifetime_ruin.psi(spec, w, m)
    if criterion == "shortfall":
        return shortfall.value_shortfall(spec, w, m)
    sol = sol or _solver(spec, criterion)
    if criterion == "ruin-at-death":
        return ruin_at_death.phi(sol, w, m)
    return shortfall_at_death.U_value(sol, spec, w, m)


def cmd_value(args, spec, out):
    crit = CRITERIA[args.criterion]
    m = args.w if args.m is None else args.m
    val = evaluate(spec, crit, args.w, m, args.no_borrow)
    record = {"criterion": crit, "w": args.w, "m": m, "value": val}
    if (args.format or "json") == "json":
        write_record(out, record, "json")
    else:
        write_table(out, ["w", "m", "value"], [[args.w, m, val]])


def _pi_column(spec, crit, no_borrow_flag):
    """(column name, allocation function) for the criterion's optimal control."""
    if no_borrow_flag:
        return "pi_nb", lambda w: no_borrow.pi_nb(spec, w)
    if crit in ("lifetime-ruin", "shortfall"):
        name = "pi_psi" if crit == "lifetime-ruin" else "pi_V"
        fn = lifetime_ruin.pi_psi if crit == "lifetime-ruin" else shortfall.pi_V
        return name, lambda w: fn(spec, w)
    sol = _solver(spec, crit)
    if crit == "ruin-at-death":
        return "pi_phi", lambda w: ruin_at_death.pi_phi(sol, w)
    return "pi_U", lambda w: shortfall_at_death.pi_U(sol, spec, w)


def _with_one_sided(grid, point, eps):
    pts = set(grid)
    if grid[0] < point < grid[-1]:
        pts.update((point - eps, point + eps))
    return sorted(pts)


def cmd_strategy(args, spec, out):
    crit = CRITERIA[args.criterion]
    name, fn = _pi_column(spec, crit, args.no_borrow)
    at_death = crit in ("ruin-at-death", "shortfall-at-death")
    if args.w_min is not None:
        lo = args.w_min
    else:
        lo = spec.require_M() if at_death else spec.x - 50.0
    ws = _with_one_sided(_grid(lo, args.w_max, args.step), spec.x, 1e-6)
    header = ["w", name] if name == "pi_psi" else ["w", name, "pi_psi"]
    rows = []
    for w in ws:
        row = [w, fn(w)]
        if len(header) == 3:
            row.append(lifetime_ruin.pi_psi(spec, w))
        rows.append(row)
    write_table(out, header, rows, args.format or "csv")


def cmd_figure1(args, spec, out):
    spec.require_M()
    sol = ruin_at_death.solve_ruin_at_death(spec)
    lo = spec.M if args.w_min is None else args.w_min
    ws = _with_one_sided(_grid(lo, args.w_max, args.step), spec.x, args.eps)
    rows = [[w, ruin_at_death.pi_phi(sol, w), lifetime_ruin.pi_psi(spec, w)] for w in ws]
    write_table(out, ["w", "pi_phi", "pi_psi"], rows, args.format or "csv")


def _sim_strategy(args, spec, crit):
    name = (
        args.strategy
        or {
            "lifetime-ruin": "psi",
            "shortfall": "psi",
            "ruin-at-death": "phi",
            "shortfall-at-death": "U",
        }[crit]
    )
    if name == "psi":
        return name, lifetime_ruin.psi_strategy(spec)
    if name == "phi":
        return name, ruin_at_death.phi_strategy(ruin_at_death.solve_ruin_at_death(spec))
    if name == "U":
        return name, shortfall_at_death.U_strategy(shortfall_at_death.solve_U(spec))
    if name == "nb":
        return name, no_borrow.nb_strategy(spec)
    if not args.strategy_file:
        raise ConfigError("--strategy file needs --strategy-file PATH")
    try:
        return name, load_strategy_csv(args.strategy_file)
    except OSError as exc:
        raise ConfigError(f"cannot read strategy file: {exc.strerror}") from None


OPTIMAL = {
    "lifetime-ruin": "psi",
    "shortfall": "psi",
    "ruin-at-death": "phi",
    "shortfall-at-death": "U",
}


def cmd_simulate(args, spec, out):
    from .simulation import (
        LifetimeRuin,
        LifetimeShortfall,
        RuinAtDeath,
        ShortfallAtDeath,
        SimConfig,
        simulate_objective,
    )

    crit = CRITERIA[args.criterion]
    m = args.w if args.m is None else args.m
    name, strat = _sim_strategy(args, spec, crit)
    if crit == "lifetime-ruin":
        obj = LifetimeRuin(spec.x)
    elif crit == "shortfall":
        obj = LifetimeShortfall(spec.x)
    elif crit == "ruin-at-death":
        obj = RuinAtDeath(spec.x, spec.require_M())
    else:
        obj = ShortfallAtDeath(spec.x, spec.require_M())
    benchmark = None
    if name == OPTIMAL[crit]:
        benchmark = evaluate(spec, crit, args.w, m)
    elif name == "nb" and crit in ("lifetime-ruin", "shortfall") and spec.mode is not None:
        benchmark = evaluate(spec, crit, args.w, m, no_borrow_flag=True)
    cfg = SimConfig(
        paths=args.paths,
        dt=args.dt,
        seed=args.seed,
        antithetic=args.antithetic,
        exact_gbm=not args.no_exact,
    )
    res = simulate_objective(spec, strat, obj, cfg, args.w, m, benchmark=benchmark)
    write_record(out, res.as_record(), args.format or "json")


def cmd_sweep(args, spec, out):
    crit = CRITERIA[args.criterion]
    ws = _grid(args.w_min, args.w_max, args.w_step)
    full = args.m_min is not None or args.m_max is not None
    if full and (args.m_min is None or args.m_max is None):
        raise ConfigError("--m-min and --m-max go together")
    if args.no_borrow:
        if crit not in ("lifetime-ruin", "shortfall"):
            raise ConfigError("--no-borrow sweeps cover lifetime-ruin and shortfall together")
        sol = no_borrow.solve_psi_nb(spec)
        header = ["w", "m", "psi_nb", "V_nb", "pi_nb"] if full else ["w", "psi_nb", "V_nb", "pi_nb"]

        def row(w, m):
            pi = no_borrow.pi_nb(spec, w) if w <= spec.consts.safe else 0.0
            vals = [no_borrow.psi_nb(sol, w, m), no_borrow.value_shortfall_nb(spec, w, m), pi]
            return [w, m, *vals] if full else [w, *vals]

    else:
        sol = _solver(spec, crit)
        header = ["w", "m", "value"] if full else ["w", "value"]

        def row(w, m):
            val = evaluate(spec, crit, w, m, sol=sol)
            return [w, m, val] if full else [w, val]

    rows = []
    for w in ws:
        ms = [mm for mm in _grid(args.m_min, args.m_max, args.m_step) if mm <= w] if full else [w]
        rows.extend(row(w, mm) for mm in ms)
    write_table(out, header, rows, args.format or "csv")


COMMANDS = {
    "params": cmd_params,
    "value": cmd_value,
    "strategy": cmd_strategy,
    "figure1": cmd_figure1,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def _fail(kind, exc, code):
    msg = str(exc).replace("\n", " ")
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": msg}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    buf = io.StringIO()
    try:
        spec = resolve_spec(args)
        COMMANDS[args.command](args, spec, buf)
    except (ParameterError, DomainError, ConfigError) as exc:
        return _fail("invalid_spec", exc, EXIT_SPEC)
    except (SolverError, NumericalError) as exc:
        return _fail("solver_failure", exc, EXIT_SOLVER)
    except (RuinkitError, ArithmeticError, RuntimeError) as exc:
        return _fail("solver_failure", exc, EXIT_SOLVER)
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _entry():
    sys.exit(main())


if __name__ == "__main__":
    _entry()
