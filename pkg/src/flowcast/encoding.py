"""Fixed-length feature vectors for (partial) traces.

A frozen schema maps a trace to the concatenation of: a one-hot block
for the last event's activity, one block per additional attribute using
the latest observed value (one-hot for nominal domains, a single slot
for numeric ones), and optionally a state-context block produced by the
transition-system encoder.  Missing and unseen nominal values encode as
all-zero blocks; a missing numeric value encodes as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eventlog import NOMINAL, NUMERIC, EventLog, Trace, last_value, remaining_time
from .transition_system import TransitionSystem, encode_state

BINARY_SLOT = "binary"
NUMERIC_SLOT = "numeric"


@dataclass(frozen=True)
class AttributeEncoder:
    """Encoder for one attribute block."""

    name: str
    kind: str  # NOMINAL or NUMERIC
    values: tuple = ()  # ordered dictionary, nominal only
    low: float | None = None  # scaling bounds, numeric only; None = raw
    high: float | None = None

    def width(self) -> int:
        return len(self.values) if self.kind == NOMINAL else 1


@dataclass(frozen=True)
class EncodingSchema:
    """Frozen slot layout: activity block, attribute blocks, state block."""

    activities: tuple[str, ...]
    attributes: tuple[AttributeEncoder, ...] = ()
    state_dim: int = 0

    @property
    def dimension(self) -> int:
        return len(self.activities) + sum(a.width() for a in self.attributes) + self.state_dim

    def slot_kinds(self) -> tuple[str, ...]:
        """Per-slot likelihood family: one-hot slots vs real-valued slots."""
        kinds = [BINARY_SLOT] * len(self.activities)
        for enc in self.attributes:
            if enc.kind == NOMINAL:
                kinds += [BINARY_SLOT] * len(enc.values)
            else:
                kinds.append(NUMERIC_SLOT)
        kinds += [NUMERIC_SLOT] * self.state_dim
        return tuple(kinds)

    def without_state_block(self) -> "EncodingSchema":
        return EncodingSchema(self.activities, self.attributes, 0)


def fit_schema(log: EventLog, with_state_block: TransitionSystem | None = None,
               scale_numeric: bool = True) -> EncodingSchema:
    """Freeze encoding dictionaries from a training log.

    Numeric attributes record min/max scaling bounds unless
    ``scale_numeric`` is false, in which case raw values are emitted.
    """
    activities = tuple(sorted(log.activity_alphabet))
    encoders = []
    for i, fld in enumerate(log.schema):
        if fld.kind == NOMINAL:
            seen = set(fld.values)
            for trace in log:
                for event in trace.events:
                    if event.attributes[i] is not None:
                        seen.add(event.attributes[i])
            encoders.append(AttributeEncoder(fld.name, NOMINAL, tuple(sorted(seen))))
        else:
            low = high = None
            if scale_numeric:
                observed = [e.attributes[i] for t in log for e in t.events
                            if e.attributes[i] is not None]
                if observed:
                    low, high = float(min(observed)), float(max(observed))
            encoders.append(AttributeEncoder(fld.name, NUMERIC, (), low, high))
    state_dim = len(with_state_block.state_order) if with_state_block is not None else 0
    return EncodingSchema(activities, tuple(encoders), state_dim)


def encode(schema: EncodingSchema, trace: Trace,
           ts_context: TransitionSystem | None = None) -> np.ndarray:
    """Feature vector of a (partial) trace under a frozen schema."""
    if (schema.state_dim > 0) != (ts_context is not None):
        raise ValueError("schema state block and ts_context must be given together")
    vec = np.zeros(schema.dimension)
    if len(trace) > 0:
        last_activity = trace.events[-1].activity
        if last_activity in schema.activities:
            vec[schema.activities.index(last_activity)] = 1.0
    offset = len(schema.activities)
    for slot, enc in enumerate(schema.attributes):
        value = last_value(trace, slot)
        if enc.kind == NOMINAL:
            if value is not None and value in enc.values:
                vec[offset + enc.values.index(value)] = 1.0
            offset += len(enc.values)
        else:
            if value is not None:
                v = float(value)
                if enc.low is not None and enc.high is not None:
                    if enc.high > enc.low:
                        v = (v - enc.low) / (enc.high - enc.low)
                        v = min(max(v, 0.0), 1.0)  # clamp prediction-time outliers
                    else:
                        v = 0.0
                vec[offset] = v
            offset += 1
    if schema.state_dim > 0:
        state_vec = encode_state(ts_context, trace)
        if len(state_vec) != schema.state_dim:
            raise ValueError("ts_context state count does not match schema")
        vec[offset:offset + schema.state_dim] = state_vec
    return vec


@dataclass(frozen=True)
class TrainingSet:
    """Feature matrix plus remaining-time targets in seconds."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1 or len(self.X) != len(self.y):
            raise ValueError("X must be (n, d) and y (n,)")
        if len(self.y) and self.y.min() < 0:
            raise ValueError("remaining-time targets must be >= 0")

    def __len__(self) -> int:
        return len(self.y)

    @property
    def dimension(self) -> int:
        return self.X.shape[1]


def build_training_set(log: EventLog, schema: EncodingSchema,
                       ts_context: TransitionSystem | None = None) -> TrainingSet:
    """One example per non-empty prefix of every trace.

    The example for prefix length k pairs the encoded prefix with the
    remaining time measured at the prefix's last event.
    """
    rows = []
    targets = []
    for trace in log:
        for k in range(1, len(trace) + 1):
            rows.append(encode(schema, trace.prefix(k), ts_context))
            targets.append(remaining_time(trace, k))
    if not rows:
        return TrainingSet(np.zeros((0, schema.dimension)), np.zeros(0))
    return TrainingSet(np.asarray(rows, dtype=float), np.asarray(targets, dtype=float))
