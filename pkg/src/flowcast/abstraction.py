"""Trace-prefix state representations and the similarity functions over them.

A state abstraction maps a trace prefix to a hashable representation:
the set, multiset or sequence of its activity names, optionally after
restricting the prefix to its last ``horizon`` events.  Each abstraction
kind has a matching similarity in [0, 1] used to soft-encode prefixes
that do not map onto a known state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .eventlog import Trace, tail

SET = "set"
MULTISET = "multiset"
SEQUENCE = "sequence"
_KINDS = (SET, MULTISET, SEQUENCE)


def event_label(event) -> str:
    """Default event representation: the activity name."""
    return event.activity


@dataclass(frozen=True)
class StateAbstraction:
    """How a trace prefix is collapsed into a state representation."""

    kind: str = SET
    horizon: int | None = None  # None = unlimited, else the last h events

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown abstraction kind {self.kind!r}")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "StateAbstraction":
        """Parse a CLI/config spelling: ``set | multiset | seq`` with an
        optional ``:h`` horizon suffix, e.g. ``seq:4`` or ``set:1``."""
        name, sep, hor = text.strip().partition(":")
        kind = {"set": SET, "multiset": MULTISET, "seq": SEQUENCE, "sequence": SEQUENCE}.get(name)
        if kind is None:
            raise ValueError(f"unknown abstraction {text!r}")
        horizon = None
        if sep:
            try:
                horizon = int(hor)
            except ValueError:
                raise ValueError(f"bad horizon in {text!r}") from None
        return cls(kind, horizon)

    def spelling(self) -> str:
        name = {SET: "set", MULTISET: "multiset", SEQUENCE: "seq"}[self.kind]
        return name if self.horizon is None else f"{name}:{self.horizon}"


def represent_state(abstraction: StateAbstraction, prefix: Trace):
    """Representation of a trace prefix under the given abstraction.

    Returns a frozenset for the set kind, a sorted tuple of
    (activity, count) pairs for the multiset kind, and a tuple of
    activity names for the sequence kind.  Deterministic and hashable.
    """
    labels = [event_label(e) for e in prefix.events]
    if abstraction.horizon is not None:
        labels = list(tail(labels, abstraction.horizon))
    if abstraction.kind == SET:
        return frozenset(labels)
    if abstraction.kind == MULTISET:
        counts: dict[str, int] = {}
        for a in labels:
            counts[a] = counts.get(a, 0) + 1
        return tuple(sorted(counts.items()))
    return tuple(labels)


class ActivityCodec:
    """Bijective mapping between activity names and integer codes.

    Gives sequence comparisons an unbounded symbol space regardless of
    the size of the activity alphabet.
    """

    def __init__(self, activities: Iterable[str] = ()):
        self._codes: dict[str, int] = {}
        self._names: list[str] = []
        for a in activities:
            self.code(a)

    def code(self, activity: str) -> int:
        if activity not in self._codes:
            self._codes[activity] = len(self._names)
            self._names.append(activity)
        return self._codes[activity]

    def encode(self, activities: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.code(a) for a in activities)

    def decode(self, codes: Sequence[int]) -> tuple[str, ...]:
        return tuple(self._names[c] for c in codes)


def damerau_levenshtein(s1: Sequence, s2: Sequence) -> int:
    """Unrestricted Damerau-Levenshtein distance between two sequences.

    Minimum number of insertions, deletions, substitutions and
    transpositions turning ``s1`` into ``s2``.  Unlike the restricted
    (optimal string alignment) variant, transposed elements may be
    edited afterwards, which keeps the distance a true metric.
    """
    n, m = len(s1), len(s2)
    if n == 0:
        return m
    if m == 0:
        return n
    bound = n + m
    # score matrix with a sentinel border row/column at index 0
    h = [[bound] * (m + 2) for _ in range(n + 2)]
    for i in range(n + 1):
        h[i + 1][1] = i
    for j in range(m + 1):
        h[1][j + 1] = j
    last_row: dict = {}
    for i in range(1, n + 1):
        last_col = 0
        for j in range(1, m + 1):
            row = last_row.get(s2[j - 1], 0)
            col = last_col
            if s1[i - 1] == s2[j - 1]:
                cost = 0
                last_col = j
            else:
                cost = 1
            h[i + 1][j + 1] = min(
                h[i][j] + cost,  # substitution or match
                h[i + 1][j] + 1,  # insertion
                h[i][j + 1] + 1,  # deletion
                h[row][col] + (i - row - 1) + 1 + (j - col - 1),  # transposition
            )
        last_row[s1[i - 1]] = i
    return h[n + 1][m + 1]


def set_similarity(x1: frozenset | set, x2: frozenset | set) -> float:
    """Jaccard similarity of two sets; 1.0 when both are empty."""
    if not x1 and not x2:
        return 1.0
    return len(x1 & x2) / len(x1 | x2)


def bag_similarity(x1: Mapping, x2: Mapping) -> float:
    """Multiset Jaccard: summed per-element minima over summed maxima."""
    elements = set(x1) | set(x2)
    if not elements:
        return 1.0
    lo = sum(min(x1.get(e, 0), x2.get(e, 0)) for e in elements)
    hi = sum(max(x1.get(e, 0), x2.get(e, 0)) for e in elements)
    return lo / hi


def sequence_similarity(x1: Sequence[str], x2: Sequence[str]) -> float:
    """1 minus the normalized Damerau-Levenshtein distance."""
    if not x1 and not x2:
        return 1.0
    codec = ActivityCodec()
    c1 = codec.encode(x1)
    c2 = codec.encode(x2)
    return 1.0 - damerau_levenshtein(c1, c2) / max(len(c1), len(c2))


def similarity_for(abstraction: StateAbstraction) -> Callable:
    """Similarity function over state representations of the given kind."""
    if abstraction.kind == SET:
        return set_similarity
    if abstraction.kind == MULTISET:
        return lambda r1, r2: bag_similarity(dict(r1), dict(r2))
    if abstraction.kind == SEQUENCE:
        return sequence_similarity
    raise ValueError(f"unknown abstraction kind {abstraction.kind!r}")
