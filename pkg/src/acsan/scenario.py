"""Scenario model and order theory over its events.

The declared ``order`` pairs form a relation whose transitive closure
must be a strict partial order; the causality graph is its transitive
reduction (Hasse diagram).  Layer peeling and linear-extension
enumeration drive the two analysis modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .policy import PolicyRule
from .terms import Const
from .transition import Event, Query


class CyclicOrder(Exception):
    def __init__(self, cycle: list[str]):
        super().__init__("order cycle: " + " < ".join(cycle))
        self.cycle = cycle


class UnknownEvent(Exception):
    pass


class TooLarge(Exception):
    pass


DEFAULT_ENUMERATION_CAP = 10


@dataclass(frozen=True)
class CausalityRelation:
    events: tuple[Event, ...]
    edges: tuple[tuple[Event, Event], ...]  # declared pairs, before closure

    def index(self, event: Event) -> int:
        return self.events.index(event)


@dataclass(frozen=True)
class CausalityGraph:
    nodes: tuple[Event, ...]
    arcs: frozenset[tuple[Event, Event]]


def _successors(rel: CausalityRelation) -> dict[Event, set[Event]]:
    succ: dict[Event, set[Event]] = {e: set() for e in rel.events}
    for a, b in rel.edges:
        if a not in succ or b not in succ:
            missing = a if a not in succ else b
            raise UnknownEvent(f"order mentions unknown event {missing.name}")
        succ[a].add(b)
    return succ


def _check_acyclic(rel: CausalityRelation) -> dict[Event, set[Event]]:
    succ = _successors(rel)
    WHITE, GREY, BLACK = 0, 1, 2
    color = {e: WHITE for e in rel.events}
    stack_path: list[Event] = []

    def visit(e: Event) -> list[Event] | None:
        color[e] = GREY
        stack_path.append(e)
        for n in sorted(succ[e], key=rel.index):
            if color[n] == GREY:
                i = stack_path.index(n)
                return stack_path[i:] + [n]
            if color[n] == WHITE:
                cycle = visit(n)
                if cycle:
                    return cycle
        stack_path.pop()
        color[e] = BLACK
        return None

    for e in rel.events:
        if color[e] == WHITE:
            cycle = visit(e)
            if cycle:
                raise CyclicOrder([c.name for c in cycle])
    return succ


def transitive_closure(rel: CausalityRelation) -> frozenset[tuple[Event, Event]]:
    """Smallest transitive superset of the declared edges."""
    succ = _check_acyclic(rel)
    reach: dict[Event, set[Event]] = {}

    def explore(e: Event) -> set[Event]:
        if e in reach:
            return reach[e]
        out: set[Event] = set()
        for n in succ[e]:
            out.add(n)
            out |= explore(n)
        reach[e] = out
        return out

    for e in rel.events:
        explore(e)
    return frozenset((a, b) for a, bs in reach.items() for b in bs)


def transitive_reduction(rel: CausalityRelation) -> CausalityGraph:
    """Unique minimal arc set with the same closure (finite strict orders)."""
    closed = transitive_closure(rel)
    pairs = set(closed)
    arcs = {
        (a, b)
        for a, b in pairs
        if not any((a, c) in pairs and (c, b) in pairs for c in rel.events)
    }
    return CausalityGraph(rel.events, frozenset(arcs))


def minimal_elements(rel: CausalityRelation) -> set[Event]:
    closed = transitive_closure(rel)
    targets = {b for _, b in closed}
    return {e for e in rel.events if e not in targets}


def predecessors(rel: CausalityRelation, event: Event) -> set[Event]:
    if event not in rel.events:
        raise UnknownEvent(f"unknown event {event.name}")
    closed = transitive_closure(rel)
    return {a for a, b in closed if b == event}


def peel_layers(graph: CausalityGraph) -> list[set[Event]]:
    """Repeatedly strip the nodes with no incoming arcs."""
    remaining = set(graph.nodes)
    arcs = set(graph.arcs)
    layers: list[set[Event]] = []
    while remaining:
        blocked = {b for a, b in arcs if a in remaining}
        layer = {e for e in remaining if e not in blocked}
        layers.append(layer)
        remaining -= layer
        arcs = {(a, b) for a, b in arcs if a not in layer}
    return layers


def linear_extensions(rel: CausalityRelation) -> Iterator[tuple[Event, ...]]:
    """Stream every total order extending the closure, each exactly once,
    lexicographically by event declaration index."""
    closed = transitive_closure(rel)
    preds: dict[Event, set[Event]] = {e: set() for e in rel.events}
    for a, b in closed:
        preds[b].add(a)
    events = list(rel.events)

    def backtrack(chosen: list[Event], done: set[Event]) -> Iterator[tuple[Event, ...]]:
        if len(chosen) == len(events):
            yield tuple(chosen)
            return
        for e in events:
            if e in done or not preds[e] <= done:
                continue
            chosen.append(e)
            done.add(e)
            yield from backtrack(chosen, done)
            done.remove(e)
            chosen.pop()

    yield from backtrack([], set())


def count_linear_extensions(rel: CausalityRelation, cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    """Count by enumeration; refuses relations beyond the cap."""
    if len(rel.events) > cap:
        raise TooLarge(
            f"{len(rel.events)} events exceed the enumeration cap of {cap}"
        )
    return sum(1 for _ in linear_extensions(rel))


@dataclass(frozen=True)
class Scenario:
    name: str
    principals: tuple[Const, ...]
    primitives: frozenset[str]
    policies: tuple[PolicyRule, ...]  # user rules; built-ins implied
    causality: CausalityRelation
    query: Query
    uknows_hints: dict = field(default_factory=dict)  # event name -> frozenset[Atom]

    @property
    def events(self) -> tuple[Event, ...]:
        return self.causality.events

    def hint_for(self, event: Event) -> frozenset[Atom] | None:
        return self.uknows_hints.get(event.name)
