"""Canonical pretty-printer for scenarios.

`print_scenario` emits text that `parse_scenario` accepts and that
parses back to an equal scenario (round-trip property).
"""

from __future__ import annotations

from ..policy import And, Constraint, Eq, Not, PolicyRule, Prim, TrueC
from ..scenario import Scenario


def print_constraint(c: Constraint) -> str:
    if isinstance(c, TrueC):
        return "true"
    if isinstance(c, Eq):
        return f"{c.left} = {c.right}"
    if isinstance(c, Prim):
        return f"prim({c.arg})"
    if isinstance(c, Not):
        return f"not ({print_constraint(c.inner)})"
    op = "and" if isinstance(c, And) else "or"
    return f"({print_constraint(c.left)} {op} {print_constraint(c.right)})"


def print_rule(rule: PolicyRule) -> str:
    if rule.is_fact and not rule.body:
        body = "true"
    else:
        body = ", ".join(str(a) for a in rule.body)
    line = f"policy {rule.name}: {rule.head} <- {body}"
    if not isinstance(rule.constraint, TrueC):
        line += f" | {print_constraint(rule.constraint)}"
    return line + ";"


def print_scenario(sc: Scenario) -> str:
    lines = [f'scenario "{sc.name}" {{']
    if sc.principals:
        lines.append("  principals " + ", ".join(c.name for c in sc.principals) + ";")
    if sc.primitives:
        lines.append("  attributes " + ", ".join(sorted(sc.primitives)) + ";")
    if sc.policies:
        lines.append("")
        lines.extend("  " + print_rule(r) for r in sc.policies)
    if sc.events:
        lines.append("")
        for e in sc.events:
            lines.append(
                f"  event {e.name}: send {e.sender} -> {e.receiver} : {e.payload};"
            )
    if sc.causality.edges:
        lines.append("")
        for a, b in sc.causality.edges:
            lines.append(f"  order {a.name} < {b.name};")
    if sc.uknows_hints:
        lines.append("")
        for name in (e.name for e in sc.events if e.name in sc.uknows_hints):
            for fact in sorted(sc.uknows_hints[name], key=str):
                principal, infon = fact.args
                lines.append(f"  uknows {name}: {principal}, {infon};")
    if sc.query.conjuncts:
        lines.append("")
        lines.append("  query " + ", ".join(str(a) for a in sc.query.conjuncts) + ";")
    lines.append("}")
    return "\n".join(lines) + "\n"
