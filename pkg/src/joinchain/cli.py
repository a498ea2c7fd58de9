"""``jcn``: parse, normalize, compile, run and verify join-chain plans.

Exit status: 0 success, 1 verification mismatch, 2 usage error, 3 input
rejected (parse error, non-forest formula, oracle budget, bad interpretation).
Machine-readable results go to stdout or ``-o``; human notes go to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Optional, Sequence

from .engine import DomainError, execute, trace_execution
from .formula import FormulaError, parse_formula_diagnostics, render_formula
from .fuzz import check_formula, fuzz_campaign
from .generate import GeneratorParams
from .interpretation import InterpretationError, load_interpretation
from .modelcheck import BudgetExceeded, brute_force_eval, default_budget
from .normalize import NotAForest, dump_foet, foet_to_prenex, normalize_to_foet
from .planner import compile_plan, dedup_heads, dump_plan, plan_from_json

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_REJECTED = 0, 1, 2, 3


class Rejected(Exception):
    pass


def _write(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".jcn-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _read_formula(args):
    with open(args.formula, encoding="utf-8") as fh:
        text = fh.read()
    f, notes = parse_formula_diagnostics(text, reorient=args.reorient)
    for d in notes:
        print(d, file=sys.stderr)
    return f


def _budget() -> int:
    try:
        return default_budget()
    except ValueError:
        raise Rejected("JCN_BUDGET must be an integer") from None


def cmd_parse(args) -> int:
    f = _read_formula(args)
    _write(render_formula(f) + "\n", args.output)
    return EXIT_OK


def cmd_normalize(args) -> int:
    g = normalize_to_foet(_read_formula(args))
    text = dump_foet(g) if args.emit == "json" else render_formula(foet_to_prenex(g)) + "\n"
    _write(text, args.output)
    return EXIT_OK


def cmd_check(args) -> int:
    f = _read_formula(args)
    try:
        g = normalize_to_foet(f)
    except NotAForest as exc:
        if args.emit == "json":
            _write(_json({"foet": False, "reason": str(exc)}), args.output)
        else:
            _write(f"foet: no  ({exc})\n", args.output)
        return EXIT_REJECTED
    m = g.measures
    if args.emit == "json":
        _write(_json({"foet": True, "height": m.height, "width": m.width,
                      "per_tree_height": list(m.per_tree_height),
                      "per_tree_leaves": list(m.per_tree_leaves)}), args.output)
    else:
        _write(f"foet: yes  height: {m.height}  width: {m.width}\n", args.output)
    return EXIT_OK


def cmd_compile(args) -> int:
    g = normalize_to_foet(_read_formula(args))
    plan = compile_plan(g)
    if args.dedup:
        plan = dedup_heads(plan, g)
    st = plan.stats
    print(f"layers: {st.layers}  heads per layer: {list(st.heads_per_layer)}", file=sys.stderr)
    _write(dump_plan(plan), args.output)
    return EXIT_OK


def cmd_eval(args) -> int:
    with open(args.plan, encoding="utf-8") as fh:
        try:
            plan = plan_from_json(json.load(fh))
        except (ValueError, json.JSONDecodeError) as exc:
            raise Rejected(f"bad plan file: {exc}") from None
    itp = load_interpretation(args.interp)
    result = {"algebra": args.algebra}
    if args.trace:
        tr = trace_execution(plan, itp, args.algebra)
        result["output"] = [float(v) for v in tr.output]
        result["trace"] = tr.to_json()
    else:
        result["output"] = [float(v) for v in execute(plan, itp, args.algebra)]
    _write(_json(result), args.output)
    return EXIT_OK


def cmd_oracle(args) -> int:
    f = _read_formula(args)
    itp = load_interpretation(args.interp)
    out = brute_force_eval(f, itp, _budget())
    _write(_json({"algebra": "boolean", "output": [float(v) for v in out]}), args.output)
    return EXIT_OK


def _report_exit(report) -> int:
    if report.mismatches:
        return EXIT_MISMATCH
    if report.budget_errors or report.rejected:
        return EXIT_REJECTED
    return EXIT_OK


def cmd_verify(args) -> int:
    f = _read_formula(args)
    normalize_to_foet(f)
    report = check_formula(f, args.trials, args.domain, args.seed, budget=_budget())
    print(f"trials: {report.trials}  mismatches: {report.mismatches}", file=sys.stderr)
    _write(_json(report.to_json()), args.output)
    return _report_exit(report)


def cmd_fuzz(args) -> int:
    try:
        params = _params(args)
    except ValueError as exc:
        print(f"jcn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = fuzz_campaign(params, args.trials, args.formulas, budget=_budget(), workers=args.workers)
    print(
        f"formulas: {report.formulas}  trials: {report.trials}  mismatches: {report.mismatches}  "
        f"budget errors: {report.budget_errors}  time: {report.wall_time:.2f}s",
        file=sys.stderr,
    )
    _write(_json(report.to_json()), args.output)
    return _report_exit(report)


def _params(args) -> GeneratorParams:
    return GeneratorParams(
        max_trees=args.max_trees,
        max_height=args.max_height,
        max_width=args.max_width,
        max_vars=args.max_vars,
        domain_size=args.domain,
        tautology_rate=args.tautology_rate,
        seed=args.seed,
    )


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _count(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jcn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", metavar="PATH")
    common.add_argument("--reorient", action="store_true",
                        help="rewrite W(y_j,y_i) with j > i as W_rev(y_i,y_j) instead of rejecting it")
    common.add_argument("--emit", choices=("text", "json"), default="text")

    def formula_cmd(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.add_argument("formula", metavar="FORMULA")
        p.set_defaults(func=func)
        return p

    formula_cmd("parse", cmd_parse, "echo the canonical form of a formula")
    formula_cmd("normalize", cmd_normalize, "print the normalized trees")
    formula_cmd("check", cmd_check, "report tree membership, height and width")
    p = formula_cmd("compile", cmd_compile, "emit a plan file")
    p.add_argument("--dedup", action="store_true", help="share heads between identical trees")
    p = formula_cmd("oracle", cmd_oracle, "brute-force evaluation on an interpretation")
    p.add_argument("--interp", required=True, metavar="PATH")
    p = formula_cmd("verify", cmd_verify, "compare the compiled plan with the oracle")
    p.add_argument("--trials", type=_count, default=100)
    p.add_argument("--domain", type=_positive, default=3)
    p.add_argument("--seed", type=_u64, default=0)

    p = sub.add_parser("eval", parents=[common], help="run a plan file on an interpretation")
    p.add_argument("plan", metavar="PLAN")
    p.add_argument("--interp", required=True, metavar="PATH")
    p.add_argument("--algebra", choices=("boolean", "noisy-or", "sum-clamp", "plain-sum"), default="boolean")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fuzz", parents=[common], help="random equivalence campaign")
    p.add_argument("--formulas", type=_count, default=100)
    p.add_argument("--trials", type=_count, default=100)
    p.add_argument("--domain", type=_positive, default=3)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--max-trees", type=_positive, default=3)
    p.add_argument("--max-height", type=_count, default=3)
    p.add_argument("--max-width", type=_count, default=5)
    p.add_argument("--max-vars", type=_count, default=6)
    p.add_argument("--tautology-rate", type=float, default=0.2)
    p.add_argument("--workers", type=_positive, default=1)
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for attr in ("formula", "plan", "interp"):
        path = getattr(args, attr, None)
        if path is not None and not os.path.isfile(path):
            print(f"jcn: error: no such file: {path}", file=sys.stderr)
            return EXIT_USAGE
    try:
        return args.func(args)
    except (FormulaError, NotAForest, BudgetExceeded, InterpretationError, DomainError, Rejected) as exc:
        print(f"jcn: rejected: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except json.JSONDecodeError as exc:
        print(f"jcn: rejected: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_REJECTED


run = main


if __name__ == "__main__":
    sys.exit(main())
