"""Command-line interface.

Exit codes: 0 the check ran and matched its expectation (or passed, for
user models); 1 it ran and did not; 2 the model was invalid (schema,
expression, or action-data errors); 3 a numerical domain error (domain
escape, primitive-function domain, step-size check).
"""

from __future__ import annotations

import argparse
import json
import sys

from .catalog import catalog_list
from .expr import ExprError
from .fibration import DomainEscapeError, Loop, StepSizeError
from .gauge import ActionError
from .jets import EvalDomainError, OrderExceededError
from .modelio import ModelSchemaError
from .runner import (RunConfig, report_to_text, resolve_model, run_check,
                     run_couple, run_holonomy)

INVALID_MODEL = 2
DOMAIN_ERROR = 3


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--samples", type=int, default=500, help="sample point count")
    p.add_argument("--tol", type=float, default=1e-6, help="condition tolerance")
    p.add_argument("--seed", type=int, default=42, help="sampling seed")
    p.add_argument("--step", type=float, default=1e-3, help="integrator step")
    p.add_argument("--format", choices=("json", "text"), default="text", dest="fmt")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diracfib",
        description="Check, couple and transport fiber non-degenerate Dirac structures.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_check = subs.add_parser("check", help="run the four-condition integrability check")
    p_check.add_argument("model", help="catalog id or model file path")
    _add_common(p_check)

    p_couple = subs.add_parser("couple", help="build the coupling triple of a gauge model")
    p_couple.add_argument("model", help="catalog id or gauge file path")
    p_couple.add_argument("--out", help="write the coupling triple model file here")
    _add_common(p_couple)

    p_hol = subs.add_parser("holonomy", help="parallel transport around a base loop")
    p_hol.add_argument("model", help="catalog id or model file path (triple or gauge)")
    p_hol.add_argument("--loop", default="circle",
                       help="'circle' or the name of a loop defined in the model file")
    p_hol.add_argument("--center", default="0,0", help="circle center as cx,cy")
    p_hol.add_argument("--radius", type=float, default=0.1, help="circle radius")
    p_hol.add_argument("--points", type=int, default=5, help="fiber sample count")
    _add_common(p_hol)

    p_ex = subs.add_parser("examples", help="list or run the built-in catalog")
    ex_subs = p_ex.add_subparsers(dest="examples_command", required=True)
    ex_subs.add_parser("list", help="list catalog entries")
    p_run = ex_subs.add_parser("run", help="run catalog entries against their expectations")
    p_run.add_argument("id", nargs="?", default="all", help="entry id or 'all'")
    _add_common(p_run)

    return parser


def _emit(doc: dict, fmt: str):
    if fmt == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(report_to_text(doc))


def _config(args) -> RunConfig:
    return RunConfig(samples=args.samples, seed=args.seed,
                     tolerance=args.tol, step=args.step, fmt=args.fmt)


def _cmd_check(args) -> int:
    model, expected = resolve_model(args.model)
    report, code = run_check(model, _config(args), expected)
    _emit(report, args.fmt)
    return code


def _cmd_couple(args) -> int:
    model, _ = resolve_model(args.model)
    result, code = run_couple(model, _config(args), args.out)
    _emit(result, args.fmt)
    return code


def _cmd_holonomy(args) -> int:
    model, _ = resolve_model(args.model)
    base = (model.fib.base if hasattr(model, "fib") else model.connection.base)
    loops = getattr(model, "loops", {}) or {}
    if args.loop == "circle":
        center = tuple(float(c) for c in args.center.split(","))
        loop = Loop.circle(base, center, args.radius)
    elif args.loop in loops:
        loop = loops[args.loop]
    else:
        raise ModelSchemaError(
            f"loop {args.loop!r} is neither 'circle' nor defined in the model file")
    report, code = run_holonomy(model, loop, _config(args), args.points)
    _emit(report, args.fmt)
    return code


def _cmd_examples(args) -> int:
    if args.examples_command == "list":
        for entry in catalog_list():
            print(f"{entry.id:28s} [{entry.kind}] {entry.description}")
        return 0
    cfg = _config(args)
    ids = [e.id for e in catalog_list()] if args.id == "all" else [args.id]
    overall = 0
    for entry_id in ids:
        model, expected = resolve_model(entry_id)
        report, code = run_check(model, cfg, expected)
        status = "ok" if code == 0 else "MISMATCH"
        print(f"{entry_id:28s} verdict={report['verdict']:22s} {status}")
        overall = max(overall, code)
    return overall


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "couple":
            return _cmd_couple(args)
        if args.command == "holonomy":
            return _cmd_holonomy(args)
        return _cmd_examples(args)
    except (ModelSchemaError, ExprError, ActionError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return INVALID_MODEL
    except (DomainEscapeError, EvalDomainError, StepSizeError, OrderExceededError) as err:
        print(f"numerical domain error: {err}", file=sys.stderr)
        return DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
