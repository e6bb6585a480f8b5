"""Sorted term algebra: constants, the four infon constructors, matching.

The term language is a free algebra over the constants declared by a
scenario.  Equality is syntactic, which keeps ground constraint
evaluation decidable without any external solver.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass


class SortError(Exception):
    """An argument (or the whole term) has the wrong sort."""


class ArityError(Exception):
    """A constructor was applied to the wrong number of arguments."""


class Sort(enum.Enum):
    PRINCIPAL = "Principal"
    ATTRIBUTE = "Attribute"
    INFON = "Infon"
    SPEECH = "Speech"

    def __str__(self) -> str:
        return self.value


# constructor -> (argument sorts, result sort)
SIGNATURES: dict[str, tuple[tuple[Sort, ...], Sort]] = {
    "a2i": ((Sort.PRINCIPAL, Sort.ATTRIBUTE), Sort.INFON),
    "s2i": ((Sort.PRINCIPAL, Sort.SPEECH), Sort.INFON),
    "said": ((Sort.INFON,), Sort.SPEECH),
    "tdOn": ((Sort.INFON,), Sort.ATTRIBUTE),
}


@dataclass(frozen=True)
class Const:
    name: str
    sort: Sort

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Variable:
    name: str
    sort: Sort

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    constructor: str
    args: tuple["Term", ...]

    @property
    def sort(self) -> Sort:
        return SIGNATURES[self.constructor][1]

    def __str__(self) -> str:
        return "%s(%s)" % (self.constructor, ", ".join(str(a) for a in self.args))


Term = Const | Variable | App

# Substitutions map variables to terms (ground terms once a derivation is
# complete, possibly open terms mid-unification).
Substitution = dict[Variable, Term]


def mk_term(symbol: str | Const | Variable, args: tuple[Term, ...] | list[Term] = ()) -> Term:
    """Build a well-sorted term; raises SortError/ArityError otherwise."""
    args = tuple(args)
    if isinstance(symbol, (Const, Variable)):
        if args:
            raise ArityError(f"{symbol} takes no arguments")
        return symbol
    if symbol not in SIGNATURES:
        raise ArityError(f"unknown constructor {symbol!r}")
    arg_sorts, _ = SIGNATURES[symbol]
    if len(args) != len(arg_sorts):
        raise ArityError(
            f"{symbol} expects {len(arg_sorts)} arguments, got {len(args)}"
        )
    for i, (a, want) in enumerate(zip(args, arg_sorts)):
        if a.sort is not want:
            raise SortError(
                f"argument {i + 1} of {symbol} must be {want}, got {a.sort} ({a})"
            )
    return App(symbol, args)


def a2i(p: Term, a: Term) -> Term:
    return mk_term("a2i", (p, a))


def s2i(p: Term, s: Term) -> Term:
    return mk_term("s2i", (p, s))


def said(x: Term) -> Term:
    return mk_term("said", (x,))


def td_on(x: Term) -> Term:
    return mk_term("tdOn", (x,))


def is_ground(t: Term) -> bool:
    if isinstance(t, Variable):
        return False
    if isinstance(t, App):
        return all(is_ground(a) for a in t.args)
    return True


def variables_of(t: Term) -> set[Variable]:
    if isinstance(t, Variable):
        return {t}
    if isinstance(t, App):
        out: set[Variable] = set()
        for a in t.args:
            out |= variables_of(a)
        return out
    return set()


def is_prim(a: Term, primitives: frozenset[str] | set[str]) -> bool:
    """True iff `a` is one of the declared primitive attribute constants.

    tdOn-rooted attributes are never primitive.
    """
    if a.sort is not Sort.ATTRIBUTE:
        raise SortError(f"prim applies to Attribute terms, got {a.sort} ({a})")
    return isinstance(a, Const) and a.name in primitives


def apply(subst: Substitution, t: Term) -> Term:
    if isinstance(t, Variable):
        bound = subst.get(t)
        if bound is None:
            return t
        # chase chains introduced by unification
        return apply(subst, bound) if variables_of(bound) else bound
    if isinstance(t, App):
        return App(t.constructor, tuple(apply(subst, a) for a in t.args))
    return t


def match(pattern: Term, target: Term, subst: Substitution | None = None) -> Substitution | None:
    """One-sided matching of a pattern against a ground target.

    Returns the unique most-general matcher, or None.  Absence of a match
    is a value, not an error.
    """
    out: Substitution = dict(subst) if subst else {}
    stack = [(pattern, target)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Variable):
            bound = out.get(p)
            if bound is None:
                if p.sort is not t.sort:
                    return None
                out[p] = t
            elif bound != t:
                return None
        elif isinstance(p, Const):
            if p != t:
                return None
        else:
            if not isinstance(t, App) or t.constructor != p.constructor:
                return None
            stack.extend(zip(p.args, t.args))
    return out


def _walk(t: Term, subst: Substitution) -> Term:
    while isinstance(t, Variable) and t in subst:
        t = subst[t]
    return t


def _occurs(v: Variable, t: Term, subst: Substitution) -> bool:
    t = _walk(t, subst)
    if t == v:
        return True
    if isinstance(t, App):
        return any(_occurs(v, a, subst) for a in t.args)
    return False


def unify(t1: Term, t2: Term, subst: Substitution | None = None) -> Substitution | None:
    """Syntactic unification; both sides may contain variables."""
    out: Substitution = dict(subst) if subst is not None else {}
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a = _walk(a, out)
        b = _walk(b, out)
        if a == b:
            continue
        if isinstance(a, Variable):
            if a.sort is not b.sort or _occurs(a, b, out):
                return None
            out[a] = b
        elif isinstance(b, Variable):
            if b.sort is not a.sort or _occurs(b, a, out):
                return None
            out[b] = a
        elif isinstance(a, App) and isinstance(b, App) and a.constructor == b.constructor:
            stack.extend(zip(a.args, b.args))
        else:
            return None
    return out


_fresh_counter = itertools.count()


def rename_fresh(vars_: set[Variable]) -> Substitution:
    """Fresh renaming for a set of variables (schema/rule standardization)."""
    n = next(_fresh_counter)
    return {v: Variable(f"{v.name}~{n}", v.sort) for v in vars_}
