"""CLP policy rules: atoms, constraints, well-formedness, grounding.

A rule is ``head <- body & constraint`` where the head predicate is knows
and body atoms range over knows/uknows/msg.  The three built-in rules
(internal knowledge, message reception, trust application) are always
part of a policy set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .terms import (
    App,
    Const,
    Sort,
    Substitution,
    Term,
    Variable,
    apply,
    is_ground,
    is_prim,
    variables_of,
)

PREDICATE_SIGNATURES: dict[str, tuple[Sort, ...]] = {
    "uknows": (Sort.PRINCIPAL, Sort.INFON),
    "knows": (Sort.PRINCIPAL, Sort.INFON),
    "msg": (Sort.PRINCIPAL, Sort.SPEECH, Sort.PRINCIPAL),
}


class EmptyPrincipalSet(Exception):
    pass


class UnboundVariable(Exception):
    pass


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...]

    def __post_init__(self) -> None:
        sig = PREDICATE_SIGNATURES.get(self.predicate)
        if sig is None:
            raise ValueError(f"unknown predicate {self.predicate!r}")
        if len(self.args) != len(sig):
            raise ValueError(f"{self.predicate} takes {len(sig)} arguments")
        for a, want in zip(self.args, sig):
            if a.sort is not want:
                raise ValueError(
                    f"{self.predicate}: argument {a} has sort {a.sort}, expected {want}"
                )

    def __str__(self) -> str:
        return "%s(%s)" % (self.predicate, ", ".join(str(a) for a in self.args))


def atom_is_ground(a: Atom) -> bool:
    return all(is_ground(t) for t in a.args)


def atom_variables(a: Atom) -> set[Variable]:
    out: set[Variable] = set()
    for t in a.args:
        out |= variables_of(t)
    return out


def apply_atom(subst: Substitution, a: Atom) -> Atom:
    return Atom(a.predicate, tuple(apply(subst, t) for t in a.args))


# ---------------------------------------------------------------------------
# Constraints: boolean combinations of equalities, prim, and true.

@dataclass(frozen=True)
class TrueC:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term

    def __post_init__(self) -> None:
        if self.left.sort is not self.right.sort:
            raise ValueError(f"equality between different sorts: {self.left} = {self.right}")

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class Prim:
    arg: Term

    def __str__(self) -> str:
        return f"prim({self.arg})"


@dataclass(frozen=True)
class Not:
    inner: "Constraint"

    def __str__(self) -> str:
        return f"not ({self.inner})"


@dataclass(frozen=True)
class And:
    left: "Constraint"
    right: "Constraint"

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class Or:
    left: "Constraint"
    right: "Constraint"

    def __str__(self) -> str:
        return f"({self.left} or {self.right})"


Constraint = TrueC | Eq | Prim | Not | And | Or


def constraint_variables(c: Constraint) -> set[Variable]:
    if isinstance(c, TrueC):
        return set()
    if isinstance(c, Eq):
        return variables_of(c.left) | variables_of(c.right)
    if isinstance(c, Prim):
        return variables_of(c.arg)
    if isinstance(c, Not):
        return constraint_variables(c.inner)
    return constraint_variables(c.left) | constraint_variables(c.right)


def apply_constraint(subst: Substitution, c: Constraint) -> Constraint:
    if isinstance(c, TrueC):
        return c
    if isinstance(c, Eq):
        return Eq(apply(subst, c.left), apply(subst, c.right))
    if isinstance(c, Prim):
        return Prim(apply(subst, c.arg))
    if isinstance(c, Not):
        return Not(apply_constraint(subst, c.inner))
    if isinstance(c, And):
        return And(apply_constraint(subst, c.left), apply_constraint(subst, c.right))
    return Or(apply_constraint(subst, c.left), apply_constraint(subst, c.right))


def eval_constraint(c: Constraint, subst: Substitution, primitives: frozenset[str]) -> bool:
    """Evaluate under free-algebra semantics; subst must ground all variables."""
    if isinstance(c, TrueC):
        return True
    if isinstance(c, Eq):
        left, right = apply(subst, c.left), apply(subst, c.right)
        _require_ground(left)
        _require_ground(right)
        return left == right
    if isinstance(c, Prim):
        arg = apply(subst, c.arg)
        _require_ground(arg)
        return is_prim(arg, primitives)
    if isinstance(c, Not):
        return not eval_constraint(c.inner, subst, primitives)
    if isinstance(c, And):
        return eval_constraint(c.left, subst, primitives) and eval_constraint(
            c.right, subst, primitives
        )
    return eval_constraint(c.left, subst, primitives) or eval_constraint(
        c.right, subst, primitives
    )


def _require_ground(t: Term) -> None:
    free = variables_of(t)
    if free:
        names = ", ".join(sorted(v.name for v in free))
        raise UnboundVariable(f"constraint leaves {names} unbound")


# ---------------------------------------------------------------------------
# Rules

@dataclass(frozen=True)
class PolicyRule:
    name: str
    head: Atom
    body: tuple[Atom, ...] = ()
    constraint: Constraint = field(default_factory=TrueC)

    @property
    def is_fact(self) -> bool:
        return not self.body

    def variables(self) -> set[Variable]:
        out = atom_variables(self.head)
        for a in self.body:
            out |= atom_variables(a)
        return out | constraint_variables(self.constraint)

    def __str__(self) -> str:
        if self.is_fact and isinstance(self.constraint, TrueC):
            return f"{self.head} <- true"
        parts = [str(a) for a in self.body] or ["true"]
        s = f"{self.head} <- " + ", ".join(parts)
        if not isinstance(self.constraint, TrueC):
            s += f" | {self.constraint}"
        return s


def _v(name: str, sort: Sort) -> Variable:
    return Variable(name, sort)


def _builtin_rules() -> tuple[PolicyRule, PolicyRule, PolicyRule]:
    p = _v("p", Sort.PRINCIPAL)
    q = _v("q", Sort.PRINCIPAL)
    x = _v("x", Sort.INFON)
    s = _v("s", Sort.SPEECH)
    internal = PolicyRule(
        "internal-knowledge",
        head=Atom("knows", (p, x)),
        body=(Atom("uknows", (p, x)),),
    )
    receive = PolicyRule(
        "receive",
        head=Atom("knows", (q, App("s2i", (p, s)))),
        body=(Atom("msg", (p, s, q)),),
    )
    trust = PolicyRule(
        "trust-application",
        head=Atom("knows", (p, x)),
        body=(
            Atom("knows", (p, App("s2i", (q, App("said", (x,)))))),
            Atom("knows", (p, App("a2i", (q, App("tdOn", (x,)))))),
        ),
    )
    return internal, receive, trust


BUILTIN_RULES = _builtin_rules()
BUILTIN_NAMES = frozenset(r.name for r in BUILTIN_RULES)


@dataclass(frozen=True)
class PolicySet:
    """User rules plus the three built-ins, with unique names."""

    rules: tuple[PolicyRule, ...]

    @classmethod
    def with_builtins(cls, user_rules: tuple[PolicyRule, ...] | list[PolicyRule]) -> "PolicySet":
        rules = BUILTIN_RULES + tuple(user_rules)
        names = [r.name for r in rules]
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate rule names: {', '.join(dup)}")
        return cls(rules)


# ---------------------------------------------------------------------------
# Validation (condition C2) and grounding

@dataclass
class ValidationReport:
    rule: PolicyRule
    offenders: list[tuple[Variable, str]] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.offenders


def validate_rule(rule: PolicyRule) -> ValidationReport:
    """Well-formedness: body-only variables must be Principal-sorted, and
    non-Principal head variables must be bound by the body.  Bodiless fact
    schemata are exempt from the head-variable condition.
    """
    report = ValidationReport(rule)
    head_vars = atom_variables(rule.head)
    body_vars: set[Variable] = set()
    for a in rule.body:
        body_vars |= atom_variables(a)
    for v in sorted(body_vars - head_vars, key=lambda v: v.name):
        if v.sort is not Sort.PRINCIPAL:
            report.offenders.append(
                (v, f"body-only variable {v.name} has sort {v.sort}, must be Principal")
            )
    if rule.body:
        for v in sorted(head_vars - body_vars, key=lambda v: v.name):
            if v.sort is not Sort.PRINCIPAL:
                report.offenders.append(
                    (v, f"head variable {v.name} of sort {v.sort} does not occur in the body")
                )
    for v in sorted(constraint_variables(rule.constraint) - head_vars - body_vars,
                    key=lambda v: v.name):
        report.offenders.append(
            (v, f"constraint variable {v.name} occurs in neither head nor body")
        )
    return report


def ground_rule(rule: PolicyRule, principals: set[Const] | frozenset[Const]) -> list[PolicyRule]:
    """Instantiate Principal variables not shared between head and body.

    Body-only Principal variables are eliminated by enumeration over the
    principal set (condition C2 makes this exhaustive).  Principal
    variables occurring only in the head of a rule with a body are
    likewise enumerated so that derived heads are always ground.  Fact
    schemata are returned unchanged.
    """
    if not principals:
        raise EmptyPrincipalSet("cannot ground over an empty principal set")
    if rule.is_fact:
        return [rule]
    head_vars = atom_variables(rule.head)
    body_vars: set[Variable] = set()
    for a in rule.body:
        body_vars |= atom_variables(a)
    unshared = sorted(
        (v for v in head_vars ^ body_vars if v.sort is Sort.PRINCIPAL),
        key=lambda v: v.name,
    )
    if not unshared:
        return [rule]
    consts = sorted(principals, key=lambda c: c.name)
    out = []
    for assignment in product(consts, repeat=len(unshared)):
        subst: Substitution = dict(zip(unshared, assignment))
        out.append(
            PolicyRule(
                rule.name,
                head=apply_atom(subst, rule.head),
                body=tuple(apply_atom(subst, a) for a in rule.body),
                constraint=apply_constraint(subst, rule.constraint),
            )
        )
    return out


def ground_policy_set(po: PolicySet, principals: set[Const] | frozenset[Const]) -> list[PolicyRule]:
    out: list[PolicyRule] = []
    for rule in po.rules:
        if rule.is_fact:
            continue
        out.extend(ground_rule(rule, principals))
    return out
