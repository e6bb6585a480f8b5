"""Reachability analysis for scenario-based distributed access-control
policies with human-mediated certificate creation.

The library decides whether an access-control query becomes derivable
along the event sequences admitted by a scenario's causality relation,
either by enumerating every interleaving or by a layered partial-order
reduction, and produces witness traces with derivation trees.
"""

from .analysis import (
    CompatReport,
    CompatViolation,
    Verdict,
    WitnessStep,
    abduce_uknows,
    analyze_interleaving,
    analyze_partial_order,
    build_system,
    check_compat,
    replay_witness,
)
from .fixpoint import (
    BudgetExceeded,
    DerivationTree,
    FactSet,
    NotDerivable,
    constr_fp,
    derivation_of,
    entails,
)
from .policy import (
    Atom,
    BUILTIN_RULES,
    PolicyRule,
    PolicySet,
    ground_rule,
    validate_rule,
)
from .scenario import (
    CausalityRelation,
    CyclicOrder,
    Scenario,
    TooLarge,
    count_linear_extensions,
    linear_extensions,
    peel_layers,
    transitive_closure,
    transitive_reduction,
)
from .terms import App, Const, Sort, Term, Variable, a2i, s2i, said, td_on
from .transition import DisabledEvent, Event, Query, State, System

__version__ = "0.1.0"

__all__ = [
    "App",
    "Atom",
    "BUILTIN_RULES",
    "BudgetExceeded",
    "CausalityRelation",
    "CompatReport",
    "CompatViolation",
    "Const",
    "CyclicOrder",
    "DerivationTree",
    "DisabledEvent",
    "Event",
    "FactSet",
    "NotDerivable",
    "PolicyRule",
    "PolicySet",
    "Query",
    "Scenario",
    "Sort",
    "State",
    "System",
    "Term",
    "TooLarge",
    "Variable",
    "Verdict",
    "WitnessStep",
    "a2i",
    "abduce_uknows",
    "analyze_interleaving",
    "analyze_partial_order",
    "build_system",
    "check_compat",
    "constr_fp",
    "count_linear_extensions",
    "derivation_of",
    "entails",
    "ground_rule",
    "linear_extensions",
    "peel_layers",
    "replay_witness",
    "s2i",
    "said",
    "td_on",
    "transitive_closure",
    "transitive_reduction",
    "validate_rule",
]
