"""Ground least-fixpoint engine with derivation recording.

The engine closes a set of ground facts (plus non-ground fact schemata
coming from the input) under a set of grounded rules, iterating with a
change flag until nothing new is derivable.  Every derived atom gets a
justification recording the rule, the substitution, and the body atoms
that supported it; `derivation_of` replays those records into a tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .policy import (
    Atom,
    PolicyRule,
    TrueC,
    apply_atom,
    apply_constraint,
    atom_is_ground,
    atom_variables,
    eval_constraint,
)
from .terms import Substitution, Variable, match, rename_fresh, unify


class BudgetExceeded(Exception):
    """The policy set kept producing new facts past the iteration budget."""


class NotDerivable(Exception):
    pass


DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class Justification:
    kind: str  # "input" | "derived"
    rule: str | None = None
    subst: tuple[tuple[Variable, object], ...] = ()
    children: tuple[Atom, ...] = ()


INPUT = Justification("input")


@dataclass
class FactSet:
    """Ground atoms with justifications, plus input-only fact schemata."""

    ground: dict[Atom, Justification] = field(default_factory=dict)
    schemata: tuple[PolicyRule, ...] = ()
    primitives: frozenset[str] = frozenset()

    @classmethod
    def from_inputs(
        cls,
        facts,
        schemata: tuple[PolicyRule, ...] = (),
        primitives: frozenset[str] = frozenset(),
    ) -> "FactSet":
        for s in schemata:
            if s.body:
                raise ValueError(f"schema {s.name} must be bodiless")
        return cls({a: INPUT for a in facts}, tuple(schemata), primitives)

    def ground_atoms(self) -> frozenset[Atom]:
        return frozenset(self.ground)

    def copy(self) -> "FactSet":
        return FactSet(dict(self.ground), self.schemata, self.primitives)


def schema_entails(schemata: tuple[PolicyRule, ...], atom: Atom,
                   primitives: frozenset[str]) -> PolicyRule | None:
    """Return a schema subsuming the ground atom, if any."""
    for schema in schemata:
        if schema.head.predicate != atom.predicate:
            continue
        subst: Substitution | None = {}
        for pat, tgt in zip(schema.head.args, atom.args):
            subst = match(pat, tgt, subst)
            if subst is None:
                break
        if subst is None:
            continue
        try:
            if eval_constraint(schema.constraint, subst, primitives):
                return schema
        except Exception:
            continue
    return None


def entails(fact_set: FactSet, atom: Atom) -> bool:
    """True iff the atom is a known ground fact or a schema instance."""
    if atom in fact_set.ground:
        return True
    return schema_entails(fact_set.schemata, atom, fact_set.primitives) is not None


def _unify_atoms(a: Atom, b: Atom, subst: Substitution) -> Substitution | None:
    out: Substitution | None = subst
    for ta, tb in zip(a.args, b.args):
        out = unify(ta, tb, out)
        if out is None:
            return None
    return out


def _satisfy(
    body: list[Atom],
    subst: Substitution,
    by_pred: dict[str, list[Atom]],
    schemata: tuple[PolicyRule, ...],
    primitives: frozenset[str],
    pending: list,
):
    """Backtracking join of the remaining body atoms.

    Most-instantiated atoms are matched first; fully ground atoms reduce to
    a membership / schema-subsumption check.  Schema support may leave
    variables open; any schema constraints are deferred and re-checked by
    the caller once the substitution is complete.
    """
    if not body:
        yield dict(subst)
        return
    ranked = sorted(
        range(len(body)),
        key=lambda i: len(atom_variables(apply_atom(subst, body[i]))),
    )
    idx = ranked[0]
    atom = apply_atom(subst, body[idx])
    rest = body[:idx] + body[idx + 1:]
    if atom_is_ground(atom):
        facts = by_pred.get(atom.predicate)
        known = facts is not None and atom in facts
        if known or schema_entails(schemata, atom, primitives) is not None:
            yield from _satisfy(rest, subst, by_pred, schemata, primitives, pending)
        return
    # snapshot: the caller adds derived facts while we are suspended, and
    # the outer pass loop will revisit anything added after this point
    for cand in tuple(by_pred.get(atom.predicate, ())):
        s2 = _unify_atoms(atom, cand, subst)
        if s2 is not None:
            yield from _satisfy(rest, s2, by_pred, schemata, primitives, pending)
    for schema in schemata:
        if schema.head.predicate != atom.predicate:
            continue
        renaming = rename_fresh(schema.variables())
        head = apply_atom(renaming, schema.head)
        s2 = _unify_atoms(atom, head, subst)
        if s2 is None:
            continue
        if not isinstance(schema.constraint, TrueC):
            pending.append(apply_constraint(renaming, schema.constraint))
            yield from _satisfy(rest, s2, by_pred, schemata, primitives, pending)
            pending.pop()
        else:
            yield from _satisfy(rest, s2, by_pred, schemata, primitives, pending)


def constr_fp(
    fact_set: FactSet,
    rules: list[PolicyRule] | tuple[PolicyRule, ...],
    budget: int = DEFAULT_BUDGET,
) -> FactSet:
    """Least fixpoint of the grounded rules over the fact set.

    Returns a new FactSet; the input is not mutated.  Raises
    BudgetExceeded if new facts are still derivable after `budget` full
    passes.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    result = fact_set.copy()
    primitives = result.primitives
    by_pred: dict[str, set[Atom]] = {}
    for a in result.ground:
        by_pred.setdefault(a.predicate, set()).add(a)

    def lookup(pred: str):
        return by_pred.get(pred, ())

    passes = 0
    changed = True
    while changed:
        if passes >= budget:
            raise BudgetExceeded(f"fixpoint still growing after {budget} passes")
        passes += 1
        changed = False
        for rule in rules:
            pending: list = []
            for subst in _satisfy(list(rule.body), {}, by_pred, result.schemata,
                                  primitives, pending):
                head = apply_atom(subst, rule.head)
                if not atom_is_ground(head):
                    # only arises from unconstrained schema support; a
                    # non-ground head would be a new schema, which derived
                    # facts must never introduce
                    continue
                try:
                    if not eval_constraint(rule.constraint, subst, primitives):
                        continue
                    if any(
                        not eval_constraint(c, subst, primitives) for c in pending
                    ):
                        continue
                except Exception:
                    continue
                if head in result.ground:
                    continue
                if schema_entails(result.schemata, head, primitives) is not None:
                    continue
                children = tuple(apply_atom(subst, a) for a in rule.body)
                result.ground[head] = Justification(
                    "derived",
                    rule=rule.name,
                    subst=tuple(sorted(subst.items(), key=lambda kv: kv[0].name)),
                    children=children,
                )
                by_pred.setdefault(head.predicate, set()).add(head)
                changed = True
    return result


@dataclass
class DerivationTree:
    root: Atom
    justification: str  # rule name, "input fact", or "schema instance (<name>)"
    children: list["DerivationTree"] = field(default_factory=list)

    def leaves(self) -> list["DerivationTree"]:
        if not self.children:
            return [self]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def to_dict(self) -> dict:
        return {
            "fact": str(self.root),
            "rule": self.justification,
            "children": [c.to_dict() for c in self.children],
        }


def derivation_of(fact_set: FactSet, atom: Atom) -> DerivationTree:
    """Build the derivation tree recorded for a ground atom during closure."""
    just = fact_set.ground.get(atom)
    if just is None:
        if atom_is_ground(atom):
            schema = schema_entails(fact_set.schemata, atom, fact_set.primitives)
        else:
            # schema-supported body atom with open variables: any schema
            # whose head unifies subsumes it
            schema = next(
                (
                    s
                    for s in fact_set.schemata
                    if s.head.predicate == atom.predicate
                    and _unify_atoms(
                        atom, apply_atom(rename_fresh(s.variables()), s.head), {}
                    )
                    is not None
                ),
                None,
            )
        if schema is not None:
            return DerivationTree(atom, f"schema instance ({schema.name})")
        raise NotDerivable(f"{atom} is not entailed")
    if just.kind == "input":
        return DerivationTree(atom, "input fact")
    children = [derivation_of(fact_set, c) for c in just.children]
    return DerivationTree(atom, just.rule or "?", children)
