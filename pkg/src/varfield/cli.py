"""Command-line driver: ``varfield list`` and ``varfield run``."""
import argparse
import json
import sys

from .catalog import ProblemFileError, describe, load_problem
from .suites import SUITES, run_suite


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"varfield: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _parser():
    ap = _Parser(prog="varfield", description="Verify field-theory identities on catalog or user problems.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("list", help="list catalog problems and the problem-file format")
    run = sub.add_parser("run", help="run verification suites and emit a JSON report")
    run.add_argument("--problem", required=True, help="catalog name or path to a JSON problem file")
    run.add_argument("--suite", required=True, help=f"comma-separated subset of {','.join(SUITES)}, or 'all'")
    run.add_argument("--seed", type=int, default=None, help="random seed (default: the problem's seed)")
    run.add_argument("--tol-scale", type=float, default=1.0, help="multiplier applied to every upper tolerance")
    run.add_argument("--out", default=None, help="write the report here instead of standard output")
    return ap


def _suites(arg, ap):
    names = list(SUITES) if arg.strip() == "all" else [s.strip() for s in arg.split(",") if s.strip()]
    bad = [s for s in names if s not in SUITES]
    if bad or not names:
        ap.error(f"unknown suite(s) {', '.join(bad) or '(none)'}; choose from {', '.join(SUITES)}")
    return list(dict.fromkeys(names))


def _summary(report):
    lines = []
    for r in report["checks"]:
        res = "n/a" if r["max_residual"] is None else f"{r['max_residual']:.3e}"
        tol = "n/a" if r["tolerance"] is None else f"{r['tolerance']:.1e}"
        op = "<=" if r["comparison"] == "le" else ">="
        lines.append(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']:<44} {res} {op} {tol}  [{r['equation']}]")
        if "error" in r["witness"]:
            lines.append(f"      {r['witness']['error']}")
    for s in report["not_applicable"]:
        lines.append(f"SKIP  suite {s}: no applicable checks for this problem")
    failed = sum(not r["passed"] for r in report["checks"])
    lines.append(f"{report['problem']['name']}: {len(report['checks']) - failed}/{len(report['checks'])} checks passed")
    return "\n".join(lines)


def main(argv=None):
    ap = _parser()
    args = ap.parse_args(argv)
    if args.command == "list":
        print(describe())
        return 0
    suites = _suites(args.suite, ap)
    if not args.tol_scale > 0:
        ap.error("--tol-scale must be positive")
    try:
        problem = load_problem(args.problem)
    except ProblemFileError as exc:
        print(f"varfield: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"varfield: error: {args.problem!r} is neither a catalog problem nor a readable file ({exc.strerror}); see 'varfield list'", file=sys.stderr)
        return 2
    seed = problem.seed if args.seed is None else args.seed
    report = run_suite(problem, suites, seed=seed, tol_scale=args.tol_scale)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(_summary(report), file=sys.stderr)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
