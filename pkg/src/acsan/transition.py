"""Transition system over message/knowledge states.

A state is the set of exchanged messages plus the accumulated internally
known facts; its knowledge closure is recomputed (or fetched from a
cache keyed by the fact sets, which is observably equivalent) after
every step.  Events are send actions guarded by the sender's knowledge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fixpoint import DEFAULT_BUDGET, FactSet, constr_fp, entails
from .policy import Atom, PolicyRule, PolicySet, ground_policy_set
from .terms import App, Const, Term, is_ground


class DisabledEvent(Exception):
    def __init__(self, event: "Event"):
        super().__init__(f"event {event.name} is not enabled")
        self.event = event


@dataclass(frozen=True)
class Event:
    """Instance of the send rule: knows(sender, payload) => +msg(sender, said(payload), receiver)."""

    name: str
    sender: Const
    payload: Term
    receiver: Const

    def __post_init__(self) -> None:
        if not is_ground(self.payload):
            raise ValueError(f"event {self.name}: payload must be ground")

    def guard(self) -> Atom:
        return Atom("knows", (self.sender, self.payload))

    def message(self) -> Atom:
        return Atom("msg", (self.sender, App("said", (self.payload,)), self.receiver))

    def __str__(self) -> str:
        return f"{self.name}: send {self.sender} -> {self.receiver} : {self.payload}"


@dataclass(frozen=True)
class Query:
    conjuncts: tuple[Atom, ...]

    def __str__(self) -> str:
        return ", ".join(str(a) for a in self.conjuncts) or "true"


UknowsBatch = frozenset[Atom]

EMPTY_BATCH: UknowsBatch = frozenset()


@dataclass(frozen=True)
class State:
    step: int
    msgs: frozenset[Atom]
    uknows_acc: frozenset[Atom]
    closure: FactSet


@dataclass
class Stats:
    fixpoint_calls: int = 0
    sequences_explored: int = 0
    layers: int = 0

    def to_dict(self) -> dict:
        return {
            "fixpoint_calls": self.fixpoint_calls,
            "sequences_explored": self.sequences_explored,
            "layers": self.layers,
        }


@dataclass
class System:
    """Grounded policy context shared by all states of one analysis."""

    grounded_rules: list[PolicyRule]
    schemata: tuple[PolicyRule, ...]
    static_facts: frozenset[Atom]
    primitives: frozenset[str]
    budget: int = DEFAULT_BUDGET
    stats: Stats = field(default_factory=Stats)
    _closure_cache: dict = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        po: PolicySet,
        principals: set[Const] | frozenset[Const],
        primitives: frozenset[str],
        budget: int = DEFAULT_BUDGET,
    ) -> "System":
        schemata = []
        static = []
        for rule in po.rules:
            if not rule.is_fact:
                continue
            if rule.variables():
                schemata.append(rule)
            else:
                static.append(rule.head)
        return cls(
            grounded_rules=ground_policy_set(po, principals),
            schemata=tuple(schemata),
            static_facts=frozenset(static),
            primitives=primitives,
            budget=budget,
        )

    def _close(self, msgs: frozenset[Atom], uknows: frozenset[Atom]) -> FactSet:
        key = (msgs, uknows)
        cached = self._closure_cache.get(key)
        if cached is not None:
            return cached
        base = FactSet.from_inputs(
            msgs | uknows | self.static_facts, self.schemata, self.primitives
        )
        self.stats.fixpoint_calls += 1
        closed = constr_fp(base, self.grounded_rules, self.budget)
        self._closure_cache[key] = closed
        return closed

    def initial_state(self, h0: UknowsBatch = EMPTY_BATCH) -> State:
        msgs: frozenset[Atom] = frozenset()
        uknows = frozenset(h0)
        return State(0, msgs, uknows, self._close(msgs, uknows))

    def enabled(self, state: State, event: Event) -> bool:
        return entails(state.closure, event.guard())

    def apply_events(
        self,
        state: State,
        events,
        batch: UknowsBatch = EMPTY_BATCH,
    ) -> State:
        """Inject the batch, check enabledness, add messages, re-close.

        Parallel application is a single additive message update followed
        by one closure; the caller guarantees pairwise concurrency when
        more than one event is applied.
        """
        events = tuple(events)
        uknows = state.uknows_acc | batch
        if batch <= state.uknows_acc:
            guard_closure = state.closure
        else:
            guard_closure = self._close(state.msgs, uknows)
        for e in events:
            if not entails(guard_closure, e.guard()):
                raise DisabledEvent(e)
        msgs = state.msgs | {e.message() for e in events}
        return State(state.step + 1, msgs, uknows, self._close(msgs, uknows))

    def check_query(self, state: State, query: Query) -> bool:
        return all(entails(state.closure, a) for a in query.conjuncts)
