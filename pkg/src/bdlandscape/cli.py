"""Command-line front end.

Exit codes: 0 success, 1 usage or I/O error, 2 the solver did not recover the
signal.  Any flag can also come from ``--config FILE`` holding ``key = value``
lines (key is the flag name without dashes); flags on the command line win.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager

from . import __version__
from ._backend import BACKEND
from .experiments import (
    DESK_NU_VALUES,
    FULL_C_VALUES,
    FULL_NU_VALUES,
    STREAM_ENSEMBLE,
    STREAM_INIT,
    WORKERS_ENV,
    PhaseGridConfig,
    draw_init,
    heat_summary,
    landscape_survey,
    monte_carlo_population,
    run_phase_grid,
    write_phase_csv,
    write_survey_csv,
)
from .linalg import SignalPair, SingularPair, child_rng, make_rng
from .population import (
    classify_population_point,
    population_gradient_sv,
    population_value_sv,
)
from .sample import classify_sample_point, concentration_gap, delta_rate, generate_measurements
from .solver import PolyakConfig, run_polyak, write_trace_csv

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_RECOVERED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _human(v: float) -> str:
    return f"{v:.6g}"


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def read_point(path: str, d1: int, d2: int) -> SignalPair:
    """Whitespace-separated reals: the d1 entries of w followed by the d2 of x."""
    try:
        with open(path) as fh:
            vals = [float(t) for t in fh.read().split()]
    except OSError as exc:
        raise UsageError(f"cannot read point file {path}: {exc}") from None
    except ValueError:
        raise UsageError(f"point file {path} contains a non-numeric token") from None
    if len(vals) != d1 + d2:
        raise UsageError(f"point file {path} has {len(vals)} values, expected d1 + d2 = {d1 + d2}")
    try:
        return SignalPair(vals[:d1], vals[d1:])
    except ValueError as exc:
        raise UsageError(f"point file {path}: {exc}") from None


@contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None
    with fh:
        yield fh


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"missing required flag --{name.replace('_', '-')}")


def _positive(args, *names):
    for name in names:
        v = getattr(args, name)
        if v is not None and v <= 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


def _solver_config(args, trace_every=0) -> PolyakConfig:
    try:
        return PolyakConfig(
            max_iters=args.max_iters,
            f_stop=args.f_stop,
            success_rel_err=args.success_tol,
            trace_every=trace_every,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_solver_flags(p):
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--f-stop", type=float, default=1e-10)
    p.add_argument("--success-tol", type=float, default=1e-6)


# -- commands -----------------------------------------------------------------


def cmd_solve(args) -> int:
    _require(args, "d1", "d2", "nu", "seed")
    _positive(args, "d1", "d2", "nu")
    if (args.m is None) == (args.C is None):
        raise UsageError("exactly one of --m and --C is required (they are mutually exclusive)")
    m = args.m if args.m is not None else args.C * (args.d1 + args.d2)
    if m < 1:
        raise UsageError("--m/--C must give a positive number of measurements")
    trace_every = args.trace_every if args.trace else 0
    cfg = _solver_config(args, trace_every)
    truth = SignalPair.canonical(args.d1, args.d2)
    ens = generate_measurements(child_rng(args.seed, STREAM_ENSEMBLE), truth, m)
    init = draw_init(args.init, child_rng(args.seed, STREAM_INIT), args.nu, args.d1, args.d2)
    res = run_polyak(ens, init, cfg)
    if args.trace:
        try:
            write_trace_csv(res.trace, args.trace)
        except OSError as exc:
            raise UsageError(f"cannot write trace {args.trace}: {exc}") from None
    summary = {"d1": args.d1, "d2": args.d2, "m": m, **res.summary()}
    if args.json:
        print(json.dumps(summary))
    else:
        print(f"iterations      {res.iterations}")
        print(f"final value     {_human(res.final_value)}")
        print(f"relative error  {_human(res.relative_error)}")
        print(f"success         {str(res.success).lower()}")
        print(f"termination     {res.termination.value}")
    return EXIT_OK if res.success else EXIT_NOT_RECOVERED


def cmd_phase_diagram(args) -> int:
    _positive(args, "d1", "d2", "trials")
    nu_values = args.nu_list if args.nu_list is not None else (
        FULL_NU_VALUES if args.full_grid else DESK_NU_VALUES
    )
    try:
        cfg = PhaseGridConfig(
            d1=args.d1,
            d2=args.d2,
            nu_values=tuple(nu_values),
            C_values=tuple(args.C_list if args.C_list is not None else FULL_C_VALUES),
            trials=args.trials,
            init_kind=args.init,
            master_seed=args.seed,
            solver=_solver_config(args),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    # Open the output before the long run so a bad path fails fast.
    with _open_out(args.output) as fh:
        cells = run_phase_grid(cfg, workers=args.workers)
        write_phase_csv(cells, fh)
    summary_stream = sys.stderr if args.output in (None, "-") else sys.stdout
    print(heat_summary(cells), file=summary_stream)
    return EXIT_OK


def _sv_from_args(args) -> SingularPair:
    _require(args, "s1", "s2")
    if args.s2 > args.s1:
        raise UsageError("need --s1 >= --s2 (singular values are ordered)")
    if args.s2 < 0:
        raise UsageError("singular values must be nonnegative")
    return SingularPair(args.s1, args.s2)


def cmd_population(args) -> int:
    s = _sv_from_args(args)
    if args.pop_cmd == "eval":
        out = {"s1": s.s1, "s2": s.s2, "value": population_value_sv(s)}
        text = _fmt(out["value"])
    elif args.pop_cmd == "grad":
        try:
            g = population_gradient_sv(s)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        out = {"s1": s.s1, "s2": s.s2, "g1": g.g1, "g2": g.g2}
        text = f"{_fmt(g.g1)} {_fmt(g.g2)}"
    else:
        _require(args, "n", "seed")
        if args.n < 2:
            raise UsageError("--n must be at least 2")
        est, se = monte_carlo_population(make_rng(args.seed), s, args.n)
        out = {"s1": s.s1, "s2": s.s2, "n": args.n, "estimate": est, "std_error": se}
        text = f"{_fmt(est)} {_fmt(se)}"
    print(json.dumps(out) if args.json else text)
    return EXIT_OK


def cmd_classify(args) -> int:
    _require(args, "point", "d1", "d2")
    _positive(args, "d1", "d2", "tol", "c")
    p = read_point(args.point, args.d1, args.d2)
    truth = read_point(args.truth, args.d1, args.d2) if args.truth else SignalPair.canonical(args.d1, args.d2)
    try:
        if args.mode == "population":
            cls = classify_population_point(p, truth, args.tol)
            out = {"mode": "population", "class": cls.tag.value, **cls.witness}
            label = cls.tag.value
        else:
            if args.delta is not None:
                delta = args.delta
            elif args.m is not None:
                delta = delta_rate(args.d1, args.d2, args.m)
            else:
                raise UsageError("sample mode needs --delta or --m")
            cls = classify_sample_point(p, truth, delta, args.c)
            flags = sorted(f.value for f in cls.flags) or ["Unclassified"]
            out = {"mode": "sample", "flags": flags, "delta": delta, **cls.witness}
            label = ",".join(flags)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.json:
        print(json.dumps(out))
    else:
        print(label)
        for k, v in out.items():
            if isinstance(v, float):
                print(f"  {k:<20s} {_human(v)}")
    return EXIT_OK


def _parse_m_list(text: str, d1: int, d2: int) -> list[int]:
    """Comma list of sample sizes; ``4d`` means ``4 * (d1 + d2 + 1)``."""
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            m = int(tok[:-1]) * (d1 + d2 + 1) if tok.endswith("d") else int(tok)
        except ValueError:
            raise UsageError(f"bad --m-list entry {tok!r}") from None
        if m <= d1 + d2 + 1:
            raise UsageError(f"--m-list entry {tok} gives m = {m} <= d1 + d2 + 1")
        out.append(m)
    if not out:
        raise UsageError("--m-list is empty")
    return out


def concentration_rows(d1, d2, m_list, n_probes, seed):
    """Gap per sample size with probes and truth fixed by ``seed``."""
    truth = SignalPair.canonical(d1, d2)
    prng = child_rng(seed, 2)
    probes = [SignalPair(prng.standard_normal(d1), prng.standard_normal(d2)) for _ in range(n_probes)]
    rows = []
    for i, m in enumerate(m_list):
        ens = generate_measurements(child_rng(seed, STREAM_ENSEMBLE, i), truth, m)
        rows.append((m, concentration_gap(ens, probes)))
    return rows


def cmd_concentration(args) -> int:
    _require(args, "d1", "d2", "m_list", "seed")
    _positive(args, "d1", "d2", "probes")
    m_list = _parse_m_list(args.m_list, args.d1, args.d2)
    rows = concentration_rows(args.d1, args.d2, m_list, args.probes, args.seed)
    with _open_out(args.output) as fh:
        if args.json:
            fh.write(json.dumps([{"m": m, "gap": g} for m, g in rows]) + "\n")
        else:
            fh.write("m,gap\n")
            for m, g in rows:
                fh.write(f"{m},{_fmt(g)}\n")
    return EXIT_OK


def cmd_survey(args) -> int:
    _require(args, "d1", "d2", "C", "seed")
    _positive(args, "d1", "d2", "C", "starts", "c", "nu")
    try:
        counts = landscape_survey(
            args.d1, args.d2, args.C, args.starts, args.seed,
            solver=_solver_config(args), c=args.c, nu=args.nu, workers=args.workers,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    with _open_out(args.output) as fh:
        write_survey_csv(counts, fh)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bdlandscape",
        description="Nonsmooth blind deconvolution: landscape tools and Polyak experiments.",
        epilog=f"Worker processes default to ${WORKERS_ENV} (1 if unset).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("--config", metavar="FILE", help="key = value file supplying default flags")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("solve", help="run Polyak's method on one random instance")
    p.add_argument("--d1", type=int)
    p.add_argument("--d2", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--C", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--init", choices=["cube", "gaussian"], default="gaussian")
    p.add_argument("--trace", metavar="FILE")
    p.add_argument("--trace-every", type=int, default=100)
    p.add_argument("--json", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("phase-diagram", help="recovery frequency over a (nu, C) grid")
    p.add_argument("--d1", type=int, default=50)
    p.add_argument("--d2", type=int, default=25)
    p.add_argument("--nu-list", type=_float_list)
    p.add_argument("--C-list", type=_int_list)
    p.add_argument("--full-grid", action="store_true", help="nu in {2^4, ..., 2^10}")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=["cube", "gaussian"], default="gaussian")
    p.add_argument("--output", "-o", metavar="FILE")
    p.add_argument("--workers", type=int)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("population", help="closed-form population objective")
    p.add_argument("pop_cmd", choices=["eval", "grad", "mc"])
    p.add_argument("--s1", type=float)
    p.add_argument("--s2", type=float)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_population)

    p = sub.add_parser("classify", help="classify a point against the critical-point families")
    p.add_argument("--point", metavar="FILE")
    p.add_argument("--truth", metavar="FILE", help="defaults to (e1, e1)")
    p.add_argument("--d1", type=int)
    p.add_argument("--d2", type=int)
    p.add_argument("--mode", choices=["population", "sample"], default="population")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--delta", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("concentration", help="max |f_S - f_P| / ||X||_F over random probes")
    p.add_argument("--d1", type=int)
    p.add_argument("--d2", type=int)
    p.add_argument("--m-list", help="comma list; '4d' means 4*(d1+d2+1)")
    p.add_argument("--probes", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", "-o", metavar="FILE")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_concentration)

    p = sub.add_parser("survey", help="tally where Polyak runs terminate")
    p.add_argument("--d1", type=int, default=50)
    p.add_argument("--d2", type=int, default=25)
    p.add_argument("--C", type=int)
    p.add_argument("--starts", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--output", "-o", metavar="FILE")
    p.add_argument("--workers", type=int)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_survey)

    return parser


def _apply_config(parser, argv) -> argparse.Namespace:
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        values = read_config(known.config)
        # Re-parse with the file's values as defaults so type conversion applies.
        args = parser.parse_args(argv)
        if args.command is None:
            return args
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        dests = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, raw in values.items():
            if key not in dests:
                raise UsageError(f"config key {key!r} is not a flag of '{args.command}'")
            action = dests[key]
            if isinstance(action, argparse._StoreTrueAction):
                defaults[key] = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                try:
                    defaults[key] = action.type(raw)
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config key {key!r}: {exc}") from None
            else:
                defaults[key] = raw
        subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
