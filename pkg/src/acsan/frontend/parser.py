"""Scenario DSL parser.

Concrete syntax (``#`` comments, identifiers ``[A-Za-z][A-Za-z0-9_]*``)::

    scenario    := "scenario" STRING "{" decl* "}"
    decl        := "principals" idlist ";" | "attributes" idlist ";"
                 | "policy" ID ":" atom "<-" bodyOrTrue ";"
                 | "event" ID ":" "send" ID "->" ID ":" term ";"
                 | "order" ID "<" ID ";"
                 | "uknows" ID ":" ID "," term ";"
                 | "query" atom ("," atom)* ";"
    bodyOrTrue  := "true" | atom ("," atom)* ("|" constraint)?
    atom        := ("knows"|"uknows") "(" term "," term ")"
                 | "msg" "(" term "," term "," term ")"
    term        := ID | "a2i(" term "," term ")" | "s2i(" term "," term ")"
                 | "said(" term ")" | "tdOn(" term ")"
    constraint  := cAtom | constraint ("and"|"or") constraint
                 | "not" constraint | "(" constraint ")"
    cAtom       := term "=" term | "prim(" term ")" | "true"

Declared identifiers are constants; undeclared lowercase-initial
identifiers are variables (policy rules only); undeclared
uppercase-initial identifiers are rejected.  The built-in rules are
implicit and must not be redeclared.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import permutations

from ..policy import (
    And,
    Atom,
    BUILTIN_RULES,
    Constraint,
    Eq,
    Not,
    Or,
    PolicyRule,
    Prim,
    PREDICATE_SIGNATURES,
    TrueC,
    validate_rule,
)
from ..scenario import CausalityRelation, CyclicOrder, Scenario, transitive_closure
from ..terms import App, Const, SIGNATURES, Sort, Term, Variable
from ..transition import Event, Query


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    line: int
    column: int
    origin: str = "<input>"

    def __str__(self) -> str:
        return f"{self.origin}:{self.line}:{self.column}: {self.severity}: [{self.code}] {self.message}"


@dataclass(frozen=True)
class ScenarioSource:
    text: str
    origin: str = "<input>"

    @classmethod
    def from_file(cls, path: str) -> "ScenarioSource":
        with open(path, encoding="utf-8") as fh:
            return cls(fh.read(), path)


class _Abort(Exception):
    """Internal: stop parsing the current declaration."""


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<id>[A-Za-z][A-Za-z0-9_]*)
  | (?P<sym><-|->|[{}();,:<=|])
    """,
    re.VERBOSE,
)

_KEYWORDS = {
    "scenario", "principals", "attributes", "policy", "event", "send",
    "order", "uknows", "query", "true", "and", "or", "not", "prim",
}


@dataclass
class _Token:
    kind: str  # "string" | "id" | "sym" | "eof"
    value: str
    line: int
    column: int


def _lex(src: ScenarioSource) -> tuple[list[_Token], list[Diagnostic]]:
    tokens: list[_Token] = []
    diags: list[Diagnostic] = []
    line, col, pos = 1, 1, 0
    text = src.text
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diags.append(
                Diagnostic("error", "E-PARSE", f"unexpected character {text[pos]!r}",
                           line, col, src.origin)
            )
            pos += 1
            col += 1
            continue
        value = m.group(0)
        kind = m.lastgroup or "ws"
        if kind != "ws":
            tokens.append(_Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens, diags


class _Parser:
    def __init__(self, src: ScenarioSource):
        self.src = src
        self.tokens, self.diags = _lex(src)
        self.pos = 0
        self.principals: dict[str, Const] = {}
        self.attributes: dict[str, Const] = {}
        self.policies: list[PolicyRule] = []
        self.events: list[Event] = []
        self.event_by_name: dict[str, Event] = {}
        self.order_edges: list[tuple[str, str, _Token]] = []
        self.hints: dict[str, frozenset[Atom]] = {}
        self.query: Query | None = None
        self.name = ""

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, code: str, message: str, tok: _Token | None = None) -> None:
        tok = tok or self.peek()
        self.diags.append(
            Diagnostic("error", code, message, tok.line, tok.column, self.src.origin)
        )

    def abort(self, code: str, message: str, tok: _Token | None = None) -> None:
        self.error(code, message, tok)
        raise _Abort()

    def expect(self, value: str) -> _Token:
        tok = self.next()
        if tok.value != value:
            shown = tok.value or "end of input"
            self.abort("E-PARSE", f"expected {value!r}, found {shown!r}", tok)
        return tok

    def expect_id(self, what: str = "identifier") -> _Token:
        tok = self.next()
        if tok.kind != "id":
            shown = tok.value or "end of input"
            self.abort("E-PARSE", f"expected {what}, found {shown!r}", tok)
        return tok

    def skip_to_semicolon(self) -> None:
        while self.peek().kind != "eof" and self.peek().value not in (";", "}"):
            self.next()
        if self.peek().value == ";":
            self.next()

    # -- grammar -----------------------------------------------------------

    def parse(self) -> Scenario | None:
        try:
            self.expect("scenario")
            tok = self.next()
            if tok.kind != "string":
                self.abort("E-PARSE", "expected scenario name string", tok)
            self.name = tok.value[1:-1]
            self.expect("{")
        except _Abort:
            return None
        while self.peek().value != "}" and self.peek().kind != "eof":
            try:
                self.declaration()
            except _Abort:
                self.skip_to_semicolon()
        if self.peek().value != "}":
            self.error("E-PARSE", "expected '}'")
        return self.finish()

    def declaration(self) -> None:
        tok = self.next()
        handlers = {
            "principals": self.decl_idlist,
            "attributes": self.decl_idlist,
            "policy": self.decl_policy,
            "event": self.decl_event,
            "order": self.decl_order,
            "uknows": self.decl_uknows,
            "query": self.decl_query,
        }
        handler = handlers.get(tok.value)
        if handler is None:
            self.abort("E-PARSE", f"expected a declaration, found {tok.value!r}", tok)
            return
        if tok.value in ("principals", "attributes"):
            self.decl_idlist(tok.value)
        else:
            handler()

    def decl_idlist(self, which: str) -> None:
        sort = Sort.PRINCIPAL if which == "principals" else Sort.ATTRIBUTE
        table = self.principals if which == "principals" else self.attributes
        while True:
            tok = self.expect_id()
            if tok.value in self.principals or tok.value in self.attributes:
                self.error("E-DUP", f"constant {tok.value!r} already declared", tok)
            elif tok.value in _KEYWORDS or tok.value in PREDICATE_SIGNATURES or tok.value in SIGNATURES:
                self.error("E-PARSE", f"{tok.value!r} is reserved", tok)
            else:
                table[tok.value] = Const(tok.value, sort)
            if self.peek().value != ",":
                break
            self.next()
        self.expect(";")

    def decl_policy(self) -> None:
        name_tok = self.expect_id("policy name")
        name = name_tok.value
        self.expect(":")
        variables: dict[str, Variable] = {}
        head = self.atom(variables, allow_vars=True)
        self.expect("<-")
        body: list[Atom] = []
        constraint: Constraint = TrueC()
        if self.peek().value == "true" and self.tokens[self.pos + 1].value == ";":
            self.next()
        else:
            body.append(self.atom(variables, allow_vars=True))
            while self.peek().value == ",":
                self.next()
                body.append(self.atom(variables, allow_vars=True))
            if self.peek().value == "|":
                self.next()
                constraint = self.constraint(variables)
        self.expect(";")
        if head.predicate != "knows":
            self.error("E-C2", f"policy {name}: head predicate must be knows", name_tok)
            return
        rule = PolicyRule(name, head, tuple(body), constraint)
        if any(n.name == name for n in self.policies):
            self.error("E-DUP", f"policy {name!r} already declared", name_tok)
            return
        if _matches_builtin(rule):
            self.error(
                "E-BUILTIN",
                f"policy {name} restates a built-in rule; built-ins are implicit",
                name_tok,
            )
            return
        report = validate_rule(rule)
        for var, why in report.offenders:
            self.error("E-C2", f"policy {name}: {why}", name_tok)
        if report.valid:
            self.policies.append(rule)

    def decl_event(self) -> None:
        name_tok = self.expect_id("event name")
        self.expect(":")
        self.expect("send")
        sender = self.principal_const()
        self.expect("->")
        receiver = self.principal_const()
        self.expect(":")
        payload = self.term({}, Sort.INFON, allow_vars=False)
        self.expect(";")
        name = name_tok.value
        if name in self.event_by_name:
            self.error("E-DUP", f"event {name!r} already declared", name_tok)
            return
        event = Event(name, sender, payload, receiver)
        self.events.append(event)
        self.event_by_name[name] = event

    def decl_order(self) -> None:
        first = self.expect_id("event name")
        self.expect("<")
        second = self.expect_id("event name")
        self.expect(";")
        self.order_edges.append((first.value, second.value, first))

    def decl_uknows(self) -> None:
        event_tok = self.expect_id("event name")
        self.expect(":")
        principal = self.principal_const()
        self.expect(",")
        infon = self.term({}, Sort.INFON, allow_vars=False)
        self.expect(";")
        fact = Atom("uknows", (principal, infon))
        existing = self.hints.get(event_tok.value, frozenset())
        self.hints[event_tok.value] = existing | {fact}

    def decl_query(self) -> None:
        conjuncts = [self.atom({}, allow_vars=False)]
        while self.peek().value == ",":
            self.next()
            conjuncts.append(self.atom({}, allow_vars=False))
        semi = self.expect(";")
        for a in conjuncts:
            if a.predicate != "knows":
                self.error("E-QUERY", f"query conjunct {a} must use knows", semi)
                return
        if self.query is not None:
            self.error("E-DUP", "query already declared", semi)
            return
        self.query = Query(tuple(conjuncts))

    # -- atoms, terms, constraints ----------------------------------------

    def principal_const(self) -> Const:
        tok = self.expect_id("principal")
        c = self.principals.get(tok.value)
        if c is None:
            if tok.value in self.attributes:
                self.abort("E-SORT", f"{tok.value!r} is an attribute, expected a principal", tok)
            self.abort("E-UNDECLARED", f"undeclared principal {tok.value!r}", tok)
        return c

    def atom(self, variables: dict[str, Variable], allow_vars: bool) -> Atom:
        tok = self.expect_id("predicate")
        sig = PREDICATE_SIGNATURES.get(tok.value)
        if sig is None:
            self.abort("E-PARSE", f"unknown predicate {tok.value!r}", tok)
        self.expect("(")
        args = []
        for i, sort in enumerate(sig):
            if i:
                self.expect(",")
            args.append(self.term(variables, sort, allow_vars))
        self.expect(")")
        return Atom(tok.value, tuple(args))

    def term(self, variables: dict[str, Variable], expected: Sort | None,
             allow_vars: bool) -> Term:
        tok = self.expect_id("term")
        name = tok.value
        if name in SIGNATURES:
            arg_sorts, result = SIGNATURES[name]
            if expected is not None and result is not expected:
                self.abort("E-SORT", f"{name}(...) has sort {result}, expected {expected}", tok)
            self.expect("(")
            args = []
            for i, sort in enumerate(arg_sorts):
                if i:
                    self.expect(",")
                args.append(self.term(variables, sort, allow_vars))
            self.expect(")")
            return App(name, tuple(args))
        const = self.principals.get(name) or self.attributes.get(name)
        if const is not None:
            if expected is not None and const.sort is not expected:
                self.abort("E-SORT", f"{name} has sort {const.sort}, expected {expected}", tok)
            return const
        if name[0].islower() and name not in _KEYWORDS:
            if not allow_vars:
                self.abort("E-GROUND", f"variable {name!r} not allowed here; term must be ground", tok)
            var = variables.get(name)
            if var is None:
                if expected is None:
                    self.abort("E-SORT", f"cannot infer the sort of variable {name!r}", tok)
                var = Variable(name, expected)
                variables[name] = var
            elif expected is not None and var.sort is not expected:
                self.abort(
                    "E-SORT",
                    f"variable {name!r} used with sort {expected}, previously {var.sort}",
                    tok,
                )
            return var
        self.abort("E-UNDECLARED", f"undeclared constant {name!r}", tok)

    def constraint(self, variables: dict[str, Variable]) -> Constraint:
        left = self.constraint_conj(variables)
        while self.peek().value == "or":
            self.next()
            left = Or(left, self.constraint_conj(variables))
        return left

    def constraint_conj(self, variables: dict[str, Variable]) -> Constraint:
        left = self.constraint_unary(variables)
        while self.peek().value == "and":
            self.next()
            left = And(left, self.constraint_unary(variables))
        return left

    def constraint_unary(self, variables: dict[str, Variable]) -> Constraint:
        tok = self.peek()
        if tok.value == "not":
            self.next()
            return Not(self.constraint_unary(variables))
        if tok.value == "(":
            self.next()
            inner = self.constraint(variables)
            self.expect(")")
            return inner
        if tok.value == "true":
            self.next()
            return TrueC()
        if tok.value == "prim":
            self.next()
            self.expect("(")
            arg = self.term(variables, Sort.ATTRIBUTE, allow_vars=True)
            self.expect(")")
            return Prim(arg)
        left = self.term(variables, None, allow_vars=True)
        eq_tok = self.expect("=")
        right = self.term(variables, left.sort, allow_vars=True)
        try:
            return Eq(left, right)
        except ValueError as exc:
            self.abort("E-SORT", str(exc), eq_tok)

    # -- assembly ----------------------------------------------------------

    def finish(self) -> Scenario | None:
        if not self.principals:
            self.error("E-UNDECLARED", "scenario declares no principals")
        edges: list[tuple[Event, Event]] = []
        for first, second, tok in self.order_edges:
            a = self.event_by_name.get(first)
            b = self.event_by_name.get(second)
            if a is None or b is None:
                missing = first if a is None else second
                self.error("E-UNDECLARED", f"order mentions unknown event {missing!r}", tok)
                continue
            edges.append((a, b))
        for event_name in self.hints:
            if event_name not in self.event_by_name:
                self.error("E-UNDECLARED", f"uknows hint for unknown event {event_name!r}")
        causality = CausalityRelation(tuple(self.events), tuple(edges))
        try:
            transitive_closure(causality)
        except CyclicOrder as exc:
            self.error("E-CYCLE", str(exc))
        if any(d.severity == "error" for d in self.diags):
            return None
        return Scenario(
            name=self.name,
            principals=tuple(self.principals.values()),
            primitives=frozenset(self.attributes),
            policies=tuple(self.policies),
            causality=causality,
            query=self.query or Query(()),
            uknows_hints=dict(self.hints),
        )


def _canonical(rule: PolicyRule, body: tuple[Atom, ...]) -> tuple:
    order: dict[Variable, int] = {}

    def walk(t: Term):
        if isinstance(t, Variable):
            order.setdefault(t, len(order))
            return ("v", order[t], t.sort.value)
        if isinstance(t, App):
            return (t.constructor,) + tuple(walk(a) for a in t.args)
        return ("c", t.name)

    def atom_key(a: Atom):
        return (a.predicate,) + tuple(walk(t) for t in a.args)

    return (atom_key(rule.head), tuple(atom_key(a) for a in body),
            isinstance(rule.constraint, TrueC))


def _matches_builtin(rule: PolicyRule) -> bool:
    """Alpha-equivalence against a built-in, modulo body atom order."""
    if not isinstance(rule.constraint, TrueC) or len(rule.body) > 2:
        return False
    for builtin in BUILTIN_RULES:
        if len(builtin.body) != len(rule.body):
            continue
        target = _canonical(builtin, builtin.body)
        if any(
            _canonical(rule, perm) == target
            for perm in permutations(rule.body)
        ):
            return True
    return False


def parse_query_text(text: str, sc: Scenario) -> tuple[Query | None, list[Diagnostic]]:
    """Parse a ground query conjunction in a scenario's namespace."""
    parser = _Parser(ScenarioSource(text, "<query>"))
    parser.principals = {c.name: c for c in sc.principals}
    parser.attributes = {n: Const(n, Sort.ATTRIBUTE) for n in sorted(sc.primitives)}
    conjuncts: list[Atom] = []
    try:
        conjuncts.append(parser.atom({}, allow_vars=False))
        while parser.peek().value == ",":
            parser.next()
            conjuncts.append(parser.atom({}, allow_vars=False))
        if parser.peek().kind != "eof":
            parser.error("E-PARSE", f"unexpected trailing input {parser.peek().value!r}")
    except _Abort:
        pass
    for a in conjuncts:
        if a.predicate != "knows":
            parser.error("E-QUERY", f"query conjunct {a} must use knows")
    if any(d.severity == "error" for d in parser.diags):
        return None, parser.diags
    return Query(tuple(conjuncts)), parser.diags


def parse_scenario(src: ScenarioSource | str) -> tuple[Scenario | None, list[Diagnostic]]:
    """Parse and validate a scenario; returns (scenario, diagnostics).

    The scenario is None whenever any error-severity diagnostic was
    produced.
    """
    if isinstance(src, str):
        src = ScenarioSource(src)
    parser = _Parser(src)
    scenario = parser.parse()
    return scenario, parser.diags
