"""Command-line entry point.

Subcommands: prove, plan, simulate, check-property1, validate.  Exit
codes: 0 success / proved / plan found; 1 negative result (not proved,
no plan, validation problems); 2 budget exhausted; 64 usage error.
Results go to stdout, diagnostics to stderr; output is deterministic
for fixed inputs.
"""

from __future__ import annotations

import argparse
import os
import sys

from .blocks import GoalSpec, load_world, world_signature
from .foprover import Budget, EXHAUSTED, PROVED, render_derivation
from .kernel import RequirementConfig, derive_property1
from .planner import Plan, PlanningProblem, plan as search_plan
from .scenario import ScenarioError, load_scenario, run
from .sexpr import ParseError, parse_dcec_file, parse_formula
from .shadow import SchemaSet, prove
from .sorts import default_signature

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_BUDGET = 2
EXIT_USAGE = 64


def _budget(args) -> Budget:
    ms = getattr(args, "budget", None)
    if ms is None:
        ms = int(os.environ.get("MINDROOM_BUDGET_MS", "10000"))
    return Budget(max_time_ms=ms)


def _schemas(args) -> SchemaSet:
    return SchemaSet(
        modal_depth_bound=getattr(args, "depth", 3),
        round_bound=getattr(args, "rounds", 8),
    )


def cmd_prove(args) -> int:
    sig = default_signature()
    if args.signature:
        sig = _load_signature_constants(args.signature, sig)
    try:
        premises = parse_dcec_file(args.premises, sig)
        goals = parse_dcec_file(args.goal, sig)
    except (ParseError, OSError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if len(goals) != 1:
        print("the goal file must hold exactly one formula", file=sys.stderr)
        return EXIT_USAGE
    result = prove(premises, goals[0], _schemas(args), _budget(args), sig)
    print(result.status)
    if args.derivation and result.derivation:
        print(render_derivation(result.derivation))
    if result.proved:
        return EXIT_OK
    return EXIT_BUDGET if result.status == EXHAUSTED else EXIT_NEGATIVE


def _load_signature_constants(path, sig):
    """Optional constants file: lines `NAME SORT`."""
    extra = {}
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith(";"):
                continue
            name, sort = line.split()
            extra[name] = sort
    return sig.with_constants(extra)


def cmd_plan(args) -> int:
    try:
        state, goals, sig = load_world(args.world)
    except (ParseError, OSError, ValueError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.goal:
        try:
            goals = [GoalSpec(parse_formula(args.goal, sig), args.prio)]
        except ParseError as exc:
            print(exc, file=sys.stderr)
            return EXIT_USAGE
    if not goals:
        print("no goal given (world file or --goal)", file=sys.stderr)
        return EXIT_USAGE
    problem = PlanningProblem(state, tuple(goals), max_depth=args.max_depth)
    result = search_plan(problem, _budget(args), sig)
    if isinstance(result, Plan):
        print(result.render())
        return EXIT_OK
    print(result.reason, file=sys.stderr)
    return EXIT_NEGATIVE


def cmd_simulate(args) -> int:
    try:
        sc = load_scenario(args.scenario)
    except (ScenarioError, ParseError, OSError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    trace = run(sc, _budget(args))
    print(trace.dump(), end="")
    return EXIT_OK


def cmd_check_property1(args) -> int:
    cfg = RequirementConfig(delta=args.delta)
    result = derive_property1(cfg, _budget(args), ablate=args.ablate)
    print(result.status)
    if result.derivation and (args.derivation or args.ablate is None):
        print(render_derivation(result.derivation))
    if result.proved:
        return EXIT_OK
    return EXIT_BUDGET if result.status == EXHAUSTED else EXIT_NEGATIVE


def cmd_validate(args) -> int:
    path = args.path
    try:
        if path.endswith(".scn"):
            load_scenario(path)
        elif path.endswith(".world"):
            load_world(path)
        elif path.endswith(".dcec"):
            sig = default_signature()
            if args.signature:
                sig = _load_signature_constants(args.signature, sig)
            parse_dcec_file(path, sig)
        else:
            print(f"unknown file kind: {path}", file=sys.stderr)
            return EXIT_USAGE
    except (ScenarioError, ParseError, ValueError, OSError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_NEGATIVE
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="mindroom",
        description="Sorted modal event-calculus reasoner, planner, and room simulator.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="prove a goal from premises (.dcec files)")
    p.add_argument("--premises", required=True, help=".dcec file, one formula per line")
    p.add_argument("--goal", required=True, help=".dcec file holding one formula")
    p.add_argument("--signature", help="extra constants file: NAME SORT per line")
    p.add_argument("--depth", type=int, default=3, help="modal nesting bound")
    p.add_argument("--rounds", type=int, default=8, help="schema round bound")
    p.add_argument("--budget", type=int, help="time budget in milliseconds")
    p.add_argument("--derivation", action="store_true", help="print the derivation")
    p.set_defaults(fn=cmd_prove)

    p = sub.add_parser("plan", help="plan over a .world file")
    p.add_argument("--world", required=True)
    p.add_argument("--goal", help="goal formula, e.g. '(On A C)'")
    p.add_argument("--prio", type=int, default=1)
    p.add_argument("--max-depth", type=int, default=20)
    p.add_argument("--budget", type=int)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("simulate", help="run a .scn session and dump the trace")
    p.add_argument("scenario")
    p.add_argument("--budget", type=int)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser(
        "check-property1",
        help="machine-check the expectation-of-usefulness derivation",
    )
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--ablate", help="drop one requirement axiom, e.g. I_f3_ii")
    p.add_argument("--budget", type=int)
    p.add_argument("--derivation", action="store_true")
    p.set_defaults(fn=cmd_check_property1)

    p = sub.add_parser("validate", help="validate a .scn / .world / .dcec file")
    p.add_argument("path")
    p.add_argument("--signature")
    p.set_defaults(fn=cmd_validate)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
