"""Command-line interface.

Subcommands: check, validate, extensions, explain.  Exit codes:
0 = query reachable / validation passed, 1 = unreachable / violations,
2 = input error (parse, sorts, cycles, missing file), 3 = internal limit
(iteration budget or enumeration cap exceeded).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from ..analysis import (
    CompatViolation,
    Verdict,
    analyze_interleaving,
    analyze_partial_order,
    check_compat,
)
from ..fixpoint import BudgetExceeded, DEFAULT_BUDGET, NotDerivable, derivation_of
from ..scenario import (
    DEFAULT_ENUMERATION_CAP,
    Scenario,
    TooLarge,
    count_linear_extensions,
    linear_extensions,
)
from ..transition import Query
from .parser import ScenarioSource, parse_query_text, parse_scenario

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_LIMIT = 3


def _budget_default() -> int:
    env = os.environ.get("ACSAN_MAX_ITERS")
    if env is None:
        return DEFAULT_BUDGET
    try:
        return int(env)
    except ValueError:
        return DEFAULT_BUDGET


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="acsan",
        description="Reachability analysis of scenario-based access-control policies.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("file", help="scenario file (.acs)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument(
            "--max-iters",
            type=int,
            default=_budget_default(),
            metavar="N",
            help="fixpoint iteration budget (env ACSAN_MAX_ITERS)",
        )

    check = sub.add_parser("check", help="decide reachability of the query")
    common(check)
    check.add_argument(
        "--mode",
        choices=("interleaving", "partial-order"),
        default="partial-order",
    )
    check.add_argument("--query", metavar="ATOMS", help="override the scenario query")
    check.add_argument(
        "--compat",
        choices=("strict", "exhaustive", "skip"),
        default="strict",
        help="compatibility validation before partial-order reduction",
    )

    validate = sub.add_parser("validate", help="report COMP1/COMP2 compatibility")
    common(validate)
    validate.add_argument(
        "--exhaustive", action="store_true",
        help="check COMP1 at every state of every linear extension",
    )

    ext = sub.add_parser("extensions", help="linear extensions of the causality relation")
    common(ext)
    group = ext.add_mutually_exclusive_group()
    group.add_argument("--count", action="store_true", help="print the count (default)")
    group.add_argument("--list", action="store_true", dest="list_all")
    ext.add_argument("--cap", type=int, default=DEFAULT_ENUMERATION_CAP, metavar="N")

    explain = sub.add_parser("explain", help="print the query's derivation tree")
    common(explain)
    explain.add_argument(
        "--mode",
        choices=("interleaving", "partial-order"),
        default="partial-order",
    )
    explain.add_argument("--query", metavar="ATOMS")
    return ap


def _load_scenario(path: str) -> tuple[Scenario | None, int]:
    try:
        src = ScenarioSource.from_file(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
        return None, EXIT_INPUT
    scenario, diags = parse_scenario(src)
    for d in diags:
        print(d, file=sys.stderr)
    if scenario is None:
        return None, EXIT_INPUT
    return scenario, EXIT_OK


def _resolve_query(sc: Scenario, override: str | None) -> tuple[Scenario | None, int]:
    if override is None:
        return sc, EXIT_OK
    query, diags = parse_query_text(override, sc)
    for d in diags:
        print(d, file=sys.stderr)
    if query is None:
        return None, EXIT_INPUT
    return dataclasses.replace(sc, query=query), EXIT_OK


def _derivation_dict(verdict: Verdict, query: Query) -> dict | None:
    if not verdict.reachable or verdict.final_state is None or not query.conjuncts:
        return None
    closure = verdict.final_state.closure
    try:
        trees = [derivation_of(closure, a) for a in query.conjuncts]
    except NotDerivable:
        return None
    if len(trees) == 1:
        return trees[0].to_dict()
    return {
        "fact": str(query),
        "rule": "conjunction",
        "children": [t.to_dict() for t in trees],
    }


def verdict_to_dict(verdict: Verdict, sc: Scenario, mode: str) -> dict:
    layers = []
    for step in verdict.witness or []:
        layers.append(
            {
                "events": [e.name for e in step.events],
                "injected_uknows": sorted(str(a) for a in step.injected),
            }
        )
    return {
        "scenario": sc.name,
        "mode": mode,
        "result": verdict.result,
        "layers": layers,
        "derivation": _derivation_dict(verdict, sc.query),
        "stats": {
            "fixpoint_calls": verdict.stats.fixpoint_calls,
            "sequences_explored": verdict.stats.sequences_explored,
        },
    }


def _print_check_text(payload: dict) -> None:
    print(f"scenario: {payload['scenario']}")
    print(f"mode: {payload['mode']}")
    print(f"result: {payload['result']}")
    for i, layer in enumerate(payload["layers"], start=1):
        line = f"  step {i}: " + " ".join(layer["events"])
        if layer["injected_uknows"]:
            line += " | inject " + "; ".join(layer["injected_uknows"])
        print(line)
    stats = payload["stats"]
    print(
        "stats: fixpoint_calls=%d sequences_explored=%d"
        % (stats["fixpoint_calls"], stats["sequences_explored"])
    )


def cmd_check(args: argparse.Namespace) -> int:
    sc, code = _load_scenario(args.file)
    if sc is None:
        return code
    sc, code = _resolve_query(sc, getattr(args, "query", None))
    if sc is None:
        return code
    try:
        if args.mode == "partial-order":
            if args.compat != "skip":
                report = check_compat(
                    sc, args.max_iters, exhaustive=args.compat == "exhaustive"
                )
                if not report.ok:
                    _print_compat_failures(report)
                    print(
                        "error: causality relation fails compatibility; "
                        "the layered reduction does not apply "
                        "(rerun with --mode interleaving or --compat skip)",
                        file=sys.stderr,
                    )
                    return EXIT_NEGATIVE
            verdict = analyze_partial_order(sc, args.max_iters)
        else:
            verdict = analyze_interleaving(sc, args.max_iters)
    except CompatViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    payload = verdict_to_dict(verdict, sc, args.mode)
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        _print_check_text(payload)
    return EXIT_OK if verdict.reachable else EXIT_NEGATIVE


def _print_compat_failures(report) -> None:
    for l1, l2, step, why in report.comp1_violations:
        print(f"COMP1 violation at step {step}: {why}", file=sys.stderr)
    for event, guard in report.comp2_violations:
        print(
            f"COMP2 violation: {event.name} not enabled by its predecessors "
            f"(guard {guard})",
            file=sys.stderr,
        )


def cmd_validate(args: argparse.Namespace) -> int:
    sc, code = _load_scenario(args.file)
    if sc is None:
        return code
    try:
        report = check_compat(sc, args.max_iters, exhaustive=args.exhaustive)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    if args.format == "json":
        payload = {
            "scenario": sc.name,
            "comp1": {
                "pass": report.comp1_pass,
                "violations": [
                    {"first": a.name, "second": b.name, "step": step, "detail": why}
                    for a, b, step, why in report.comp1_violations
                ],
            },
            "comp2": {
                "pass": report.comp2_pass,
                "violations": [
                    {"event": e.name, "guard": str(g)}
                    for e, g in report.comp2_violations
                ],
            },
        }
        print(json.dumps(payload, indent=2))
    else:
        print(f"scenario: {sc.name}")
        print(f"policies: {len(sc.policies)} user rule(s), all well-formed")
        print("COMP1: " + ("pass" if report.comp1_pass else "FAIL"))
        print("COMP2: " + ("pass" if report.comp2_pass else "FAIL"))
        _print_compat_failures(report)
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def cmd_extensions(args: argparse.Namespace) -> int:
    sc, code = _load_scenario(args.file)
    if sc is None:
        return code
    try:
        if args.list_all:
            if len(sc.events) > args.cap:
                raise TooLarge(
                    f"{len(sc.events)} events exceed the enumeration cap of {args.cap}"
                )
            sequences = [
                [e.name for e in seq] for seq in linear_extensions(sc.causality)
            ]
            if args.format == "json":
                print(json.dumps({"scenario": sc.name, "extensions": sequences}, indent=2))
            else:
                for seq in sequences:
                    print(" ".join(seq))
            return EXIT_OK
        n = count_linear_extensions(sc.causality, args.cap)
    except TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    if args.format == "json":
        print(json.dumps({"scenario": sc.name, "count": n}, indent=2))
    else:
        print(n)
    return EXIT_OK


def _render_tree(node: dict, depth: int, out: list[str]) -> None:
    out.append("  " * depth + f"{node['fact']}  [{node['rule']}]")
    for child in node["children"]:
        _render_tree(child, depth + 1, out)


def cmd_explain(args: argparse.Namespace) -> int:
    sc, code = _load_scenario(args.file)
    if sc is None:
        return code
    sc, code = _resolve_query(sc, getattr(args, "query", None))
    if sc is None:
        return code
    try:
        if args.mode == "partial-order":
            verdict = analyze_partial_order(sc, args.max_iters)
        else:
            verdict = analyze_interleaving(sc, args.max_iters)
    except CompatViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    if not verdict.reachable:
        print(f"query {sc.query} is unreachable; nothing to explain", file=sys.stderr)
        return EXIT_NEGATIVE
    tree = _derivation_dict(verdict, sc.query)
    if tree is None:
        print("no derivation recorded (empty query)", file=sys.stderr)
        return EXIT_NEGATIVE
    if args.format == "json":
        print(json.dumps(tree, indent=2))
    else:
        lines: list[str] = []
        _render_tree(tree, 0, lines)
        print("\n".join(lines))
    return EXIT_OK


def run_cli(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    handlers = {
        "check": cmd_check,
        "validate": cmd_validate,
        "extensions": cmd_extensions,
        "explain": cmd_explain,
    }
    return handlers[args.command](args)


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
