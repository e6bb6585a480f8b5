import pytest

from acsan.policy import (
    And,
    Atom,
    BUILTIN_NAMES,
    BUILTIN_RULES,
    EmptyPrincipalSet,
    Eq,
    Not,
    Or,
    PolicyRule,
    PolicySet,
    Prim,
    TrueC,
    UnboundVariable,
    eval_constraint,
    ground_policy_set,
    ground_rule,
    validate_rule,
)
from acsan.terms import App, Const, Sort, Variable, a2i, said, s2i, td_on

P = Const("P", Sort.PRINCIPAL)
Q = Const("Q", Sort.PRINCIPAL)
R = Const("R", Sort.PRINCIPAL)
ATT = Const("att", Sort.ATTRIBUTE)
p = Variable("p", Sort.PRINCIPAL)
q = Variable("q", Sort.PRINCIPAL)
r = Variable("r", Sort.PRINCIPAL)
x = Variable("x", Sort.INFON)


def test_atom_validation():
    with pytest.raises(ValueError):
        Atom("grants", (P, a2i(P, ATT)))
    with pytest.raises(ValueError):
        Atom("knows", (P,))
    with pytest.raises(ValueError):
        Atom("knows", (ATT, a2i(P, ATT)))
    assert str(Atom("knows", (P, a2i(P, ATT)))) == "knows(P, a2i(P, att))"


def test_eval_constraint():
    prims = frozenset({"att"})
    assert eval_constraint(TrueC(), {}, prims)
    assert eval_constraint(Eq(a2i(P, ATT), a2i(P, ATT)), {}, prims)
    assert not eval_constraint(Eq(a2i(P, ATT), a2i(Q, ATT)), {}, prims)
    assert eval_constraint(Prim(ATT), {}, prims)
    assert not eval_constraint(Prim(td_on(a2i(P, ATT))), {}, prims)
    assert eval_constraint(Not(Prim(td_on(a2i(P, ATT)))), {}, prims)
    assert eval_constraint(
        Or(Eq(P, Q), And(TrueC(), Prim(ATT))), {}, prims
    )
    assert eval_constraint(Eq(p, P), {p: P}, prims)
    with pytest.raises(UnboundVariable):
        eval_constraint(Eq(p, P), {}, prims)


def test_eq_rejects_cross_sort():
    with pytest.raises(ValueError):
        Eq(P, ATT)


def test_builtins_present_and_protected():
    assert BUILTIN_NAMES == {"internal-knowledge", "receive", "trust-application"}
    ps = PolicySet.with_builtins(())
    assert len(ps.rules) == 3
    with pytest.raises(ValueError):
        PolicySet.with_builtins((BUILTIN_RULES[0],))


def test_validate_rule_accepts_body_only_principals():
    rule = PolicyRule(
        "grant",
        head=Atom("knows", (P, a2i(p, ATT))),
        body=(Atom("knows", (P, a2i(q, ATT))), Atom("knows", (P, a2i(p, ATT)))),
    )
    assert validate_rule(rule).valid


def test_validate_rule_rejects_body_only_infon():
    rule = PolicyRule(
        "bad",
        head=Atom("knows", (P, a2i(P, ATT))),
        body=(Atom("knows", (P, x)),),
    )
    report = validate_rule(rule)
    assert not report.valid
    assert any(v is x for v, _ in report.offenders)


def test_validate_rule_rejects_unbound_head_infon():
    rule = PolicyRule(
        "bad",
        head=Atom("knows", (P, x)),
        body=(Atom("knows", (P, a2i(P, ATT))),),
    )
    assert not validate_rule(rule).valid


def test_validate_rule_exempts_fact_schemata():
    schema = PolicyRule("schema", head=Atom("knows", (p, a2i(P, td_on(x)))))
    assert validate_rule(schema).valid


def test_validate_rule_rejects_dangling_constraint_var():
    rule = PolicyRule(
        "bad",
        head=Atom("knows", (P, a2i(P, ATT))),
        body=(Atom("knows", (P, a2i(P, ATT))),),
        constraint=Eq(q, P),
    )
    assert not validate_rule(rule).valid


def test_ground_rule_enumerates_body_only_principals():
    rule = PolicyRule(
        "grant",
        head=Atom("knows", (P, a2i(P, ATT))),
        body=(Atom("knows", (q, a2i(r, ATT))),),
    )
    grounded = ground_rule(rule, {P, Q, R})
    assert len(grounded) == 9  # |C|^2
    assert all(not g.variables() for g in grounded)
    assert len({str(g) for g in grounded}) == 9


def test_ground_rule_enumerates_head_only_principals():
    # a head-only Principal variable must also be instantiated so that
    # every derivable head is ground
    rule = PolicyRule(
        "delegate",
        head=Atom("knows", (p, a2i(q, td_on(s2i(r, said(a2i(q, ATT))))))),
        body=(Atom("knows", (p, a2i(r, ATT))),),
    )
    grounded = ground_rule(rule, {P, Q})
    assert len(grounded) == 2  # only q is unshared
    head_vars = {v.name for g in grounded for v in g.variables()}
    assert head_vars == {"p", "r"}


def test_ground_rule_keeps_shared_variables():
    rule = PolicyRule(
        "fwd",
        head=Atom("knows", (p, a2i(p, ATT))),
        body=(Atom("uknows", (p, a2i(p, ATT))),),
    )
    assert ground_rule(rule, {P, Q}) == [rule]


def test_ground_rule_leaves_fact_schemata():
    schema = PolicyRule("schema", head=Atom("knows", (p, a2i(P, td_on(x)))))
    assert ground_rule(schema, {P, Q}) == [schema]


def test_ground_rule_empty_principals():
    rule = PolicyRule(
        "grant",
        head=Atom("knows", (P, a2i(P, ATT))),
        body=(Atom("knows", (q, a2i(P, ATT))),),
    )
    with pytest.raises(EmptyPrincipalSet):
        ground_rule(rule, set())


def test_ground_policy_set_covers_builtins(cro):
    ps = PolicySet.with_builtins(cro.policies)
    grounded = ground_policy_set(ps, set(cro.principals))
    names = {g.name for g in grounded}
    assert BUILTIN_NAMES <= names
    # schemata (P2, P3) are excluded; rules with bodies all present
    assert "P2" not in names and "P3" not in names
    assert {"P1", "P4"} <= names
