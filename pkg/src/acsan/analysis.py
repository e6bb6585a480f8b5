"""Reachability drivers: interleaving enumeration and the layered
partial-order reduction, plus abduction of internal-knowledge facts and
the two compatibility validators for the causality relation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fixpoint import DEFAULT_BUDGET, schema_entails
from .policy import Atom, PolicySet
from .scenario import (
    Scenario,
    linear_extensions,
    minimal_elements,
    peel_layers,
    predecessors,
    transitive_closure,
    transitive_reduction,
)
from .transition import (
    EMPTY_BATCH,
    DisabledEvent,
    Event,
    State,
    Stats,
    System,
    UknowsBatch,
)


class CompatViolation(Exception):
    """A layer contained a disabled event at run time (COMP2 failure)."""

    def __init__(self, event: Event, step: int):
        super().__init__(f"event {event.name} disabled at layer step {step}")
        self.event = event
        self.step = step


@dataclass
class WitnessStep:
    events: tuple[Event, ...]
    injected: UknowsBatch


@dataclass
class Verdict:
    result: str  # "reachable" | "unreachable"
    witness: list[WitnessStep] | None
    stats: Stats
    earliest_step: int | None = None
    final_state: State | None = None
    system: System | None = None
    sequences_total: int | None = None

    @property
    def reachable(self) -> bool:
        return self.result == "reachable"


@dataclass
class CompatReport:
    comp1_violations: list[tuple[Event, Event, int, str]] = field(default_factory=list)
    comp2_violations: list[tuple[Event, Atom]] = field(default_factory=list)

    @property
    def comp1_pass(self) -> bool:
        return not self.comp1_violations

    @property
    def comp2_pass(self) -> bool:
        return not self.comp2_violations

    @property
    def ok(self) -> bool:
        return self.comp1_pass and self.comp2_pass


def build_system(sc: Scenario, budget: int = DEFAULT_BUDGET) -> System:
    po = PolicySet.with_builtins(sc.policies)
    return System.build(po, set(sc.principals), sc.primitives, budget)


def abduce_uknows(system: System, event: Event, state: State | None = None,
                  hint: frozenset[Atom] | None = None) -> UknowsBatch:
    """Minimal internal-knowledge batch enabling the event.

    With a state, an already-enabled event needs nothing.  Without one
    (first layer, before any closure exists) the guard is checked against
    the static facts and schemata only.  A declared hint always wins.
    """
    if hint is not None:
        return frozenset(hint)
    guard = event.guard()
    if state is not None:
        if system.enabled(state, event):
            return EMPTY_BATCH
    else:
        if guard in system.static_facts or schema_entails(
            system.schemata, guard, system.primitives
        ):
            return EMPTY_BATCH
    return frozenset({Atom("uknows", (event.sender, event.payload))})


def _initial_batch(system: System, sc: Scenario, events) -> UknowsBatch:
    batch: set[Atom] = set()
    for e in sorted(events, key=sc.causality.index):
        batch |= abduce_uknows(system, e, hint=sc.hint_for(e))
    return frozenset(batch)


def analyze_interleaving(sc: Scenario, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Enumerate the linear extensions of the causality relation and solve
    one bounded reachability instance per sequence, abducing the
    internal-knowledge facts each step needs.  Deterministic: the first
    witnessing sequence in enumeration order is reported.
    """
    system = build_system(sc, budget)
    stats = system.stats
    for sequence in linear_extensions(sc.causality):
        stats.sequences_explored += 1
        h0 = (
            _initial_batch(system, sc, sequence[:1]) if sequence else EMPTY_BATCH
        )
        state = system.initial_state(h0)
        witness: list[WitnessStep] = []
        earliest: int | None = 0 if system.check_query(state, sc.query) else None
        try:
            for i, event in enumerate(sequence):
                if earliest is not None:
                    break
                if i == 0:
                    batch = h0
                else:
                    batch = abduce_uknows(system, event, state, sc.hint_for(event))
                state = system.apply_events(state, (event,), batch)
                witness.append(WitnessStep((event,), batch))
                if system.check_query(state, sc.query):
                    earliest = state.step
        except DisabledEvent as exc:
            prefix = " -> ".join(e.name for e in sequence[: len(witness) + 1])
            exc.args = (f"{exc.args[0]} (sequence prefix: {prefix})",)
            raise
        if earliest is not None:
            stats.layers = len(witness)
            return Verdict(
                "reachable",
                witness,
                stats,
                earliest_step=earliest,
                final_state=state,
                system=system,
            )
    return Verdict("unreachable", None, stats, system=system)


def analyze_partial_order(sc: Scenario, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Layered reduction: peel the causality graph, inject the abduced
    facts for the first layer into the initial state, then execute each
    layer as one parallel step (callers must have validated COMP1/COMP2).
    """
    system = build_system(sc, budget)
    stats = system.stats
    layers = peel_layers(transitive_reduction(sc.causality))
    stats.layers = len(layers)
    h0 = _initial_batch(system, sc, layers[0]) if layers else EMPTY_BATCH
    state = system.initial_state(h0)
    witness: list[WitnessStep] = []
    earliest: int | None = 0 if system.check_query(state, sc.query) else None
    for i, layer in enumerate(layers):
        if earliest is not None:
            break
        ordered = tuple(sorted(layer, key=sc.causality.index))
        batch = h0 if i == 0 else EMPTY_BATCH
        try:
            state = system.apply_events(state, ordered, EMPTY_BATCH)
        except DisabledEvent as exc:
            raise CompatViolation(exc.event, state.step + 1) from exc
        witness.append(WitnessStep(ordered, batch))
        if system.check_query(state, sc.query):
            earliest = state.step
    if earliest is not None:
        return Verdict(
            "reachable",
            witness,
            stats,
            earliest_step=earliest,
            final_state=state,
            system=system,
        )
    return Verdict("unreachable", None, stats, system=system)


def _canonical_run(system: System, sc: Scenario) -> tuple[list[State], list[set[Event]]]:
    layers = peel_layers(transitive_reduction(sc.causality))
    h0 = _initial_batch(system, sc, layers[0]) if layers else EMPTY_BATCH
    states = [system.initial_state(h0)]
    for layer in layers:
        ordered = tuple(sorted(layer, key=sc.causality.index))
        try:
            states.append(system.apply_events(states[-1], ordered, EMPTY_BATCH))
        except DisabledEvent:
            break
    return states, layers


def check_compat(sc: Scenario, budget: int = DEFAULT_BUDGET,
                 exhaustive: bool = False) -> CompatReport:
    """Decide COMP1 (concurrent events preserve each other's enabledness)
    and COMP2 (executing all predecessors enables an event).

    COMP1 is checked at the states of the canonical layered run; with
    `exhaustive`, additionally at every state of every linear extension.
    """
    system = build_system(sc, budget)
    report = CompatReport()
    closed = transitive_closure(sc.causality)
    incomparable = [
        (a, b)
        for i, a in enumerate(sc.events)
        for b in sc.events[i + 1:]
        if (a, b) not in closed and (b, a) not in closed
    ]

    def comp1_at(state: State, unexecuted: set[Event], origin: int) -> None:
        for a, b in incomparable:
            if a not in unexecuted or b not in unexecuted:
                continue
            for l1, l2 in ((a, b), (b, a)):
                if not system.enabled(state, l1):
                    continue
                before = system.enabled(state, l2)
                after = system.enabled(
                    system.apply_events(state, (l1,), EMPTY_BATCH), l2
                )
                if before != after:
                    flip = "enabled" if after else "disabled"
                    report.comp1_violations.append(
                        (l1, l2, origin, f"executing {l1.name} {flip} {l2.name}")
                    )

    states, layers = _canonical_run(system, sc)
    executed: set[Event] = set()
    for i, state in enumerate(states):
        unexecuted = set(sc.events) - executed
        comp1_at(state, unexecuted, state.step)
        if i < len(layers):
            executed |= layers[i]

    if exhaustive and len(sc.events) <= 8:
        for sequence in linear_extensions(sc.causality):
            state = system.initial_state(_initial_batch(system, sc, sequence[:1]))
            remaining = set(sequence)
            comp1_at(state, remaining, state.step)
            ok = True
            for i, event in enumerate(sequence):
                batch = abduce_uknows(system, event, state if i else None,
                                      sc.hint_for(event))
                try:
                    state = system.apply_events(state, (event,), batch)
                except DisabledEvent:
                    ok = False
                    break
                remaining.discard(event)
                comp1_at(state, remaining, state.step)
            del ok

    minimal = minimal_elements(sc.causality)
    for event in sc.events:
        pre = predecessors(sc.causality, event)
        if not pre:
            continue
        sub_layers = _restrict_layers(layers, pre)
        first = sub_layers[0] if sub_layers else set()
        state = system.initial_state(_initial_batch(system, sc, first & minimal))
        ok = True
        for layer in sub_layers:
            ordered = tuple(sorted(layer, key=sc.causality.index))
            try:
                state = system.apply_events(state, ordered, EMPTY_BATCH)
            except DisabledEvent:
                ok = False
                break
        if not ok or not system.enabled(state, event):
            report.comp2_violations.append((event, event.guard()))
    return report


def _restrict_layers(layers: list[set[Event]], subset: set[Event]) -> list[set[Event]]:
    out = []
    for layer in layers:
        kept = layer & subset
        if kept:
            out.append(kept)
    return out


def replay_witness(verdict: Verdict, sc: Scenario, budget: int = DEFAULT_BUDGET) -> bool:
    """Re-execute a reachable verdict's witness on a fresh system and
    confirm the query holds afterwards."""
    if not verdict.reachable or verdict.witness is None:
        raise ValueError("only reachable verdicts carry a witness")
    system = build_system(sc, budget)
    first_batch = verdict.witness[0].injected if verdict.witness else EMPTY_BATCH
    state = system.initial_state(first_batch)
    for i, step in enumerate(verdict.witness):
        batch = EMPTY_BATCH if i == 0 else step.injected
        state = system.apply_events(state, step.events, batch)
    return system.check_query(state, sc.query)
