"""Command line entry point: ``pairtest {simulate,experiment,analyze,verify}``.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from .analysis import analysis_table, planning_summary
from .core import Population, Semantics, as_fraction, make_rng
from .errors import PairTestError
from .harness import Algorithm, ExperimentConfig, run_algorithm, run_experiment, verify_inference

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fraction(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers: {text!r}") from exc


def _fraction_list(text: str) -> list[Fraction]:
    return [_fraction(x) for x in text.split(",") if x.strip()]


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pairtest", description="Schedule and analyse pairwise OR tests.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    algs = [a.value for a in Algorithm]

    s = sub.add_parser("simulate", help="run one algorithm on one random population")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--eps", type=_fraction, help="slacker fraction")
    s.add_argument("--delta", type=_fraction, help="worker fraction (alternative to --eps)")
    s.add_argument("--alg", choices=algs, default=Algorithm.ADAPTIVE_KNOWN.value)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--rounds", type=int, help="round count for random matching")
    s.add_argument("--population", help="explicit population such as SSWW")
    s.add_argument("--semantics", choices=["or", "and"], default="or")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--out")
    s.add_argument("--format", choices=["text", "json"], default="text")

    e = sub.add_parser("experiment", help="Monte Carlo grid, one CSV row per cell and fraction")
    e.add_argument("--n", type=_int_list, required=True, help="comma separated sizes")
    e.add_argument("--eps", type=_fraction_list, help="comma separated slacker fractions")
    e.add_argument("--delta", type=_fraction_list, help="comma separated worker fractions")
    e.add_argument("--alg", choices=algs, default=Algorithm.RANDOM_MATCHING.value)
    e.add_argument("--alpha", type=float, default=1.0)
    e.add_argument("--rounds", type=int)
    e.add_argument("--until-complete", action="store_true",
                   help="random matching: keep drawing rounds until everyone is classified")
    e.add_argument("--trials", type=int, default=100)
    e.add_argument("--fractions", type=_fraction_list, default=None)
    e.add_argument("--seed", type=_seed, default=0)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--out")
    e.add_argument("--format", choices=["csv", "json"], default="csv")
    e.add_argument("--plot-data", action="store_true", help="emit whitespace columns for gnuplot")

    a = sub.add_parser("analyze", help="closed-form planning tables")
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--eps", type=_fraction)
    a.add_argument("--delta", type=_fraction)
    a.add_argument("--alpha", type=float, default=1.0)
    a.add_argument("--k", type=_int_list, help="comma separated round counts")
    a.add_argument("--out")
    a.add_argument("--format", choices=["table", "csv", "json"], default="table")

    v = sub.add_parser("verify", help="cross-check inference rules against brute force")
    v.add_argument("--n", type=int, default=8, help="largest instance size")
    v.add_argument("--trials", type=int, default=300)
    v.add_argument("--rounds", type=int, default=3)
    v.add_argument("--semantics", choices=["or", "and"], default="or")
    v.add_argument("--seed", type=_seed, default=0)
    v.add_argument("--out")
    v.add_argument("--format", choices=["text", "json"], default="text")
    return p


def _slacker_fraction(args, multi=False):
    if args.eps is not None and args.delta is not None:
        raise UsageError("give --eps or --delta, not both")
    if args.eps is not None:
        return args.eps
    if args.delta is not None:
        return [1 - d for d in args.delta] if multi else 1 - args.delta
    raise UsageError("one of --eps or --delta is required")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    sem = Semantics.AND if args.semantics == "and" else Semantics.OR
    rng = make_rng(args.seed)
    if args.population:
        pop = Population.parse(args.population)
        if pop.n != args.n:
            raise UsageError("--population length differs from --n")
        eps = Fraction(pop.slacker_count, pop.n)
    else:
        eps = _slacker_fraction(args)
        if not 0 <= eps <= 1:
            raise UsageError("slacker fraction must lie in [0, 1]")
        pop = Population.random(args.n, round(eps * args.n), rng)
    if sem is Semantics.AND:
        # under AND the revealed class is the workers, so swap roles
        pop = pop.swapped()
    config = ExperimentConfig(Algorithm(args.alg), alpha=args.alpha, root_seed=args.seed,
                              rounds=args.rounds, semantics=sem)
    report = run_algorithm(config, args.n, eps, pop, rng, seed=args.seed)
    if args.format == "json":
        d = report.to_dict()
        d["population"] = str(pop)
        d["correct"] = report.matches(pop)
        _emit(json.dumps(d, indent=2, sort_keys=True, default=str) + "\n", args.out)
        return EXIT_OK
    lines = [
        f"algorithm   {report.algorithm}",
        f"n           {report.n}",
        f"population  {pop}",
        f"semantics   {sem.name}",
        f"seed        {args.seed}",
        f"rounds      {report.rounds_used}",
        f"tests       {report.tests_used}",
        f"state       {report.state}",
        f"complete    {report.fully_identified}",
        f"correct     {report.matches(pop)}",
        "transcript:",
        report.transcript.to_text().rstrip("\n"),
    ]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_experiment(args) -> int:
    eps_values = _slacker_fraction(args, multi=True)
    kw = {}
    if args.fractions:
        kw["target_fractions"] = tuple(float(f) for f in args.fractions)
    try:
        config = ExperimentConfig(Algorithm(args.alg), tuple(args.n), tuple(eps_values), trials=args.trials,
                                  alpha=args.alpha, root_seed=args.seed, rounds=args.rounds,
                                  until_complete=args.until_complete, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = run_experiment(config, jobs=args.jobs)
    if args.plot_data:
        text = result.to_plot_data()
    elif args.format == "json":
        text = result.to_json()
    else:
        text = result.to_csv()
    _emit(text, args.out)
    if result.partial:
        print(f"warning: {len(result.errors)} trial(s) failed; results are partial", file=sys.stderr)
    return EXIT_OK


def _aligned(rows: list[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    cells = [[_cell(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
    out = ["  ".join(c.rjust(w) for c, w in zip(cols, widths))]
    out += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(out) + "\n"


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return "" if v is None else str(v)


def cmd_analyze(args) -> int:
    eps = _slacker_fraction(args)
    n = args.n
    m = round(eps * n)
    if not 2 <= m < n:
        raise UsageError(f"need 2 <= eps*n < n, got eps*n={m}")
    summary = planning_summary(n, m, args.alpha)
    ks = args.k or sorted({1, 5, 10, 20, summary["rounds_for_confidence"]})
    rows = analysis_table(n, m, ks, args.alpha)
    if args.format == "json":
        text = json.dumps({"summary": summary, "rows": rows}, indent=2) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = _aligned([summary]) + "\n" + _aligned(rows)
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.n < 2 or args.n > 20:
        raise UsageError("--n must lie in [2, 20]")
    sem = Semantics.AND if args.semantics == "and" else Semantics.OR
    bad = verify_inference(args.n, args.trials, make_rng(args.seed), args.rounds, sem)
    if args.format == "json":
        text = json.dumps({"cases": args.trials, "mismatches": bad}, indent=2, default=str) + "\n"
    else:
        text = f"checked {args.trials} cases (n <= {args.n}, rounds <= {args.rounds}): {len(bad)} mismatches\n"
        for b in bad[:10]:
            text += f"  case {b['case']} pop={b['population']} count={b['count_constraint']}\n"
    _emit(text, args.out)
    return EXIT_MISMATCH if bad else EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "experiment": cmd_experiment,
            "analyze": cmd_analyze, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pairtest: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PairTestError, ValueError, ArithmeticError, OSError) as exc:
        print(f"pairtest: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
