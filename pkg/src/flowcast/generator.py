"""Seeded synthetic event-log generator.

Cases draw a control-flow variant (optionally conditioned on a nominal
attribute), per-case attribute values, and per-activity durations that
can depend multiplicatively on those attributes.  The same seed always
yields byte-identical logs: only ``random.Random.random()`` drives the
sampling and all derived quantities are rounded deterministically.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .eventlog import (NOMINAL, NUMERIC, AttributeField, Event, EventLog,
                       Trace)


@dataclass(frozen=True)
class AttributeSpec:
    """Per-case attribute emitted on every event of the case."""

    name: str
    kind: str  # NOMINAL or NUMERIC
    values: tuple = ()  # nominal choices
    weights: tuple = ()  # nominal choice weights, default uniform
    low: float = 0.0  # numeric range
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in (NOMINAL, NUMERIC):
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.kind == NOMINAL:
            if not self.values:
                raise ValueError(f"nominal attribute {self.name!r} needs values")
            if self.weights and len(self.weights) != len(self.values):
                raise ValueError(f"attribute {self.name!r}: weights do not match values")


@dataclass(frozen=True)
class VariantSpec:
    activities: tuple[str, ...]
    probability: float

    def __post_init__(self):
        if not self.activities:
            raise ValueError("variant needs at least one activity")
        if self.probability < 0:
            raise ValueError("variant probability must be >= 0")


@dataclass(frozen=True)
class GeneratorSpec:
    """Complete recipe for one synthetic log."""

    cases: int
    variants: tuple[VariantSpec, ...]
    attributes: tuple[AttributeSpec, ...] = ()
    base_durations: dict = field(default_factory=dict)  # activity -> seconds
    default_duration: float = 3600.0
    nominal_factors: dict = field(default_factory=dict)  # attr -> value -> multiplier
    numeric_slope: dict = field(default_factory=dict)  # attr -> slope around the range midpoint
    branch_by: str | None = None  # nominal attribute steering the variant choice
    branch_table: dict = field(default_factory=dict)  # value -> per-variant probabilities
    noise_sigma: float = 0.0  # lognormal duration noise
    seed: int = 0
    start_time: int = 1_600_000_000
    case_interarrival: int = 300
    case_id_prefix: str = "case"

    def __post_init__(self):
        if self.cases < 1:
            raise ValueError("cases must be >= 1")
        total = sum(v.probability for v in self.variants)
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"variant probabilities sum to {total}, expected 1")
        for value in self.base_durations.values():
            if value <= 0:
                raise ValueError("durations must be positive")
        if self.default_duration <= 0:
            raise ValueError("durations must be positive")
        if self.branch_by is not None:
            names = {a.name for a in self.attributes if a.kind == NOMINAL}
            if self.branch_by not in names:
                raise ValueError(f"branch_by {self.branch_by!r} is not a nominal attribute")
            for value, probs in self.branch_table.items():
                if len(probs) != len(self.variants):
                    raise ValueError(f"branch_table[{value!r}] needs {len(self.variants)} entries")
                if not math.isclose(sum(probs), 1.0, abs_tol=1e-9):
                    raise ValueError(f"branch_table[{value!r}] must sum to 1")

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        return cls(
            cases=data["cases"],
            variants=tuple(VariantSpec(tuple(v["activities"]), v["probability"])
                           for v in data["variants"]),
            attributes=tuple(
                AttributeSpec(a["name"], a["kind"],
                              tuple(a.get("values", ())), tuple(a.get("weights", ())),
                              a.get("low", 0.0), a.get("high", 1.0))
                for a in data.get("attributes", ())),
            base_durations=dict(data.get("base_durations", {})),
            default_duration=data.get("default_duration", 3600.0),
            nominal_factors={k: dict(v) for k, v in data.get("nominal_factors", {}).items()},
            numeric_slope=dict(data.get("numeric_slope", {})),
            branch_by=data.get("branch_by"),
            branch_table={k: tuple(v) for k, v in data.get("branch_table", {}).items()},
            noise_sigma=data.get("noise_sigma", 0.0),
            seed=data.get("seed", 0),
            start_time=data.get("start_time", 1_600_000_000),
            case_interarrival=data.get("case_interarrival", 300),
            case_id_prefix=data.get("case_id_prefix", "case"),
        )

    @classmethod
    def from_json(cls, text: str) -> "GeneratorSpec":
        return cls.from_dict(json.loads(text))


def _choose(rng: random.Random, probabilities) -> int:
    pick = rng.random()
    acc = 0.0
    for i, p in enumerate(probabilities):
        acc += p
        if pick < acc:
            return i
    return len(probabilities) - 1


def _gauss(rng: random.Random) -> float:
    # Box-Muller from two uniform draws; independent of library internals
    u1 = max(rng.random(), 1e-300)
    u2 = rng.random()
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def generate_log(spec: GeneratorSpec) -> EventLog:
    """Sample a complete event log from the recipe; reproducible by seed."""
    rng = random.Random(spec.seed)
    width = max(4, len(str(spec.cases)))
    variant_probs = [v.probability for v in spec.variants]

    traces = []
    for case_no in range(spec.cases):
        case_id = f"{spec.case_id_prefix}-{case_no:0{width}d}"
        values: dict = {}
        for a in spec.attributes:
            if a.kind == NOMINAL:
                weights = a.weights or tuple(1.0 / len(a.values) for _ in a.values)
                total = sum(weights)
                values[a.name] = a.values[_choose(rng, [w / total for w in weights])]
            else:
                values[a.name] = round(a.low + (a.high - a.low) * rng.random(), 6)

        if spec.branch_by is not None and values[spec.branch_by] in spec.branch_table:
            probs = spec.branch_table[values[spec.branch_by]]
        else:
            probs = variant_probs
        variant = spec.variants[_choose(rng, probs)]

        factor = 1.0
        for attr, table in spec.nominal_factors.items():
            factor *= table.get(values.get(attr), 1.0)
        for attr, slope in spec.numeric_slope.items():
            a = next(s for s in spec.attributes if s.name == attr)
            mid = (a.low + a.high) / 2.0
            span = (a.high - a.low) or 1.0
            factor *= 1.0 + slope * (values[attr] - mid) / span

        stamp = spec.start_time + case_no * spec.case_interarrival
        events = []
        attr_values = tuple(values[a.name] for a in spec.attributes)
        for position, activity in enumerate(variant.activities):
            if position > 0:
                base = spec.base_durations.get(activity, spec.default_duration)
                noise = math.exp(spec.noise_sigma * _gauss(rng)) if spec.noise_sigma > 0 else 1.0
                stamp += max(1, int(round(base * factor * noise)))
            events.append(Event(activity, case_id, stamp, attr_values))
        traces.append(Trace(case_id, tuple(events)))

    alphabet = frozenset(e.activity for t in traces for e in t.events)
    schema = []
    for i, a in enumerate(spec.attributes):
        if a.kind == NOMINAL:
            observed = sorted({t.events[0].attributes[i] for t in traces})
            schema.append(AttributeField(a.name, a.kind, tuple(observed)))
        else:
            schema.append(AttributeField(a.name, a.kind))
    return EventLog(tuple(traces), tuple(schema), alphabet)
