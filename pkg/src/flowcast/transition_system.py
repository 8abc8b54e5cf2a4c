"""Labeled transition systems mined from event logs.

States are abstraction values of observed trace prefixes; transitions
carry event labels.  The non-start states keep a stable enumeration
(level order: all length-1 prefixes over the log, then length-2, ...)
so that state vectors are reproducible across processes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .abstraction import (MULTISET, SEQUENCE, SET, StateAbstraction,
                          event_label, represent_state, similarity_for)
from .eventlog import EventLog, Trace

log = logging.getLogger(__name__)

Transition = tuple  # (source repr, event label, target repr)


@dataclass(frozen=True)
class TransitionSystem:
    abstraction: StateAbstraction
    start_state: object
    state_order: tuple  # non-start states, stable enumeration
    transitions: frozenset
    accepting_states: frozenset
    event_labels: frozenset
    _index: dict = field(init=False, repr=False, compare=False)
    _out: dict = field(init=False, repr=False, compare=False)
    _in: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {s: i for i, s in enumerate(self.state_order)}
        out: dict = {}
        into: dict = {}
        for src, label, dst in self.transitions:
            out.setdefault(src, []).append((label, dst))
            into.setdefault(dst, []).append((src, label))
        for bucket in (*out.values(), *into.values()):
            bucket.sort(key=repr)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", into)

    @property
    def states(self) -> frozenset:
        return frozenset(self.state_order) | {self.start_state}

    def state_count(self) -> int:
        return len(self.state_order) + 1

    def state_index(self, state) -> int:
        """Position of a non-start state in the stable enumeration."""
        return self._index[state]

    def has_state(self, state) -> bool:
        return state == self.start_state or state in self._index

    def out_transitions(self, state) -> list[tuple]:
        """Outgoing (label, target) pairs, deterministically ordered."""
        return list(self._out.get(state, ()))

    def in_transitions(self, state) -> list[tuple]:
        """Incoming (source, label) pairs, deterministically ordered."""
        return list(self._in.get(state, ()))

    def successors(self, state) -> frozenset:
        return frozenset(dst for _, dst in self._out.get(state, ()))


def build_transition_system(eventlog: EventLog, abstraction: StateAbstraction) -> TransitionSystem:
    """Construct the transition system of a log under an abstraction.

    First pass collects states from every prefix of every trace; second
    pass adds one transition per observed (prefix, next event) step.
    """
    if len(eventlog) == 0:
        raise ValueError("cannot build a transition system from an empty log")

    start = represent_state(abstraction, Trace("", ()))
    order: list = []
    seen = {start}
    max_len = max(len(t) for t in eventlog)
    for k in range(1, max_len + 1):
        for trace in eventlog:
            if k > len(trace):
                continue
            state = represent_state(abstraction, trace.prefix(k))
            if state not in seen:
                seen.add(state)
                order.append(state)

    transitions = set()
    labels = set()
    accepting = set()
    for trace in eventlog:
        reprs = [represent_state(abstraction, trace.prefix(k)) for k in range(len(trace) + 1)]
        for k in range(len(trace)):
            label = event_label(trace.events[k])
            labels.add(label)
            transitions.add((reprs[k], label, reprs[k + 1]))
        accepting.add(reprs[-1])

    return TransitionSystem(
        abstraction=abstraction,
        start_state=start,
        state_order=tuple(order),
        transitions=frozenset(transitions),
        accepting_states=frozenset(accepting),
        event_labels=frozenset(labels),
    )


def map_state(ts: TransitionSystem, trace: Trace) -> tuple[object, bool]:
    """Representation of a trace plus whether it is a known state."""
    state = represent_state(ts.abstraction, trace)
    return state, ts.has_state(state)


def encode_state(ts: TransitionSystem, trace: Trace, similarity=None) -> np.ndarray:
    """Vector encoding of a trace's state over the non-start states.

    Fitting traces are one-hot at their state's index; the empty trace
    is the zero vector.  Non-fitting traces get the similarity of their
    representation to every non-start state, normalized to sum to 1.
    """
    n = len(ts.state_order)
    if n == 0:
        raise ValueError("transition system has no non-start states")
    vec = np.zeros(n)
    if len(trace) == 0:
        return vec
    state, fitting = map_state(ts, trace)
    if fitting:
        if state == ts.start_state:  # unreachable for the built-in abstractions
            return vec
        vec[ts.state_index(state)] = 1.0
        return vec
    sim = similarity or similarity_for(ts.abstraction)
    for i, s in enumerate(ts.state_order):
        vec[i] = sim(state, s)
    total = vec.sum()
    if total <= 0.0:
        log.warning("degenerate state encoding: all similarities zero, using uniform vector")
        vec[:] = 1.0 / n
        return vec
    return vec / total


@dataclass(frozen=True)
class SafetyResult:
    """Outcome of trimming a trace back to a known state."""

    state: object
    prefix_length: int
    fell_back_to_start: bool  # true when only the empty prefix mapped


def safety_prefix(ts: TransitionSystem, trace: Trace) -> SafetyResult:
    """Longest prefix whose representation is a valid state.

    Removes trailing events until the mapping succeeds; the empty prefix
    always maps to the start state, in which case the caller should fall
    back to a global estimate.
    """
    for k in range(len(trace), -1, -1):
        state = represent_state(ts.abstraction, trace.prefix(k))
        if ts.has_state(state):
            return SafetyResult(state, k, len(trace) > 0 and k == 0)
    raise AssertionError("empty prefix must map to the start state")


def _label_of(state, abstraction: StateAbstraction) -> str:
    if abstraction.kind == SET:
        return "{%s}" % ", ".join(sorted(state))
    if abstraction.kind == SEQUENCE:
        return "<%s>" % ", ".join(state)
    return "[%s]" % ", ".join(f"{a}^{c}" if c > 1 else a for a, c in state)


def to_dot(ts: TransitionSystem) -> str:
    """GraphViz rendering; accepting states are double-circled."""
    ids = {ts.start_state: "s0"}
    for i, s in enumerate(ts.state_order):
        ids[s] = f"s{i + 1}"
    lines = ["digraph ts {", "  rankdir=LR;"]
    for state, name in ids.items():
        shape = "doublecircle" if state in ts.accepting_states else "circle"
        lines.append(f'  {name} [shape={shape}, label="{_label_of(state, ts.abstraction)}"];')
    for src, label, dst in sorted(ts.transitions, key=lambda t: (ids[t[0]], t[1], ids[t[2]])):
        lines.append(f'  {ids[src]} -> {ids[dst]} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def state_to_jsonable(state, abstraction: StateAbstraction):
    if abstraction.kind == SET:
        return sorted(state)
    if abstraction.kind == MULTISET:
        return [[a, c] for a, c in state]
    return list(state)


def state_from_jsonable(data, abstraction: StateAbstraction):
    if abstraction.kind == SET:
        return frozenset(data)
    if abstraction.kind == MULTISET:
        return tuple((a, int(c)) for a, c in data)
    return tuple(data)



def ts_to_dict(ts: TransitionSystem) -> dict:
    """JSON-serializable form including the state enumeration."""
    enc = lambda s: state_to_jsonable(s, ts.abstraction)
    idx = {s: i for i, s in enumerate(ts.state_order)}
    idx[ts.start_state] = -1
    return {
        "abstraction": ts.abstraction.spelling(),
        "start": enc(ts.start_state),
        "states": [enc(s) for s in ts.state_order],
        "transitions": [
            [enc(src), label, enc(dst)]
            for src, label, dst in sorted(ts.transitions, key=lambda t: (idx[t[0]], t[1], idx[t[2]]))
        ],
        "accepting": sorted((idx[s] for s in ts.accepting_states)),
    }


def ts_from_dict(data: dict) -> TransitionSystem:
    abstraction = StateAbstraction.parse(data["abstraction"])
    dec = lambda d: state_from_jsonable(d, abstraction)
    order = tuple(dec(s) for s in data["states"])
    start = dec(data["start"])
    by_index = {-1: start, **{i: s for i, s in enumerate(order)}}
    transitions = frozenset((dec(s), label, dec(d)) for s, label, d in data["transitions"])
    labels = frozenset(label for _, label, _ in transitions)
    accepting = frozenset(by_index[i] for i in data["accepting"])
    return TransitionSystem(abstraction, start, order, transitions, accepting, labels)
