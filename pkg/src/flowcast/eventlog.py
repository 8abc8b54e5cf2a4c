"""Event logs: timestamped activity records grouped into per-case traces.

The CSV interchange format is one event per row with the header
``case_id,activity,timestamp[,attr:<name>:<nominal|numeric> ...]``.
Timestamps are stored internally as integer seconds since the Unix epoch;
missing attribute values are represented by ``None``.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping

NOMINAL = "nominal"
NUMERIC = "numeric"

# Table-style timestamps, e.g. "20-02-2002:11.11" (day-month-year:hour.minute).
_DMY_RE = re.compile(r"^(\d{2})-(\d{2})-(\d{4}):(\d{2})\.(\d{2})(?:\.(\d{2}))?$")


class LogParseError(ValueError):
    """Raised when an event-log source cannot be parsed."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


def parse_timestamp(text: str) -> int:
    """Parse a timestamp string to integer epoch seconds.

    Accepts ISO-8601 (naive values are treated as UTC), the legacy
    ``dd-mm-yyyy:HH.MM[.SS]`` form, and plain integer seconds.
    """
    text = text.strip()
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    m = _DMY_RE.match(text)
    if m:
        day, month, year, hour, minute, second = m.groups()
        dt = datetime(int(year), int(month), int(day), int(hour), int(minute),
                      int(second or 0), tzinfo=timezone.utc)
        return int(dt.timestamp())
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ValueError(f"unparseable timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(seconds: int) -> str:
    """Render epoch seconds as an ISO-8601 UTC string."""
    return datetime.fromtimestamp(seconds, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")


@dataclass(frozen=True)
class AttributeField:
    """Declared domain of one additional-attribute column."""

    name: str
    kind: str  # NOMINAL or NUMERIC
    values: tuple = ()  # observed value universe, nominal columns only

    def __post_init__(self):
        if self.kind not in (NOMINAL, NUMERIC):
            raise ValueError(f"unknown attribute kind {self.kind!r}")


@dataclass(frozen=True)
class Event:
    """One executed activity of one case."""

    activity: str
    case_id: str
    timestamp: int  # seconds since the Unix epoch
    attributes: tuple = ()

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")


@dataclass(frozen=True)
class Trace:
    """The ordered event sequence of one case; may be a running prefix."""

    case_id: str
    events: tuple[Event, ...] = ()

    def __post_init__(self):
        for e in self.events:
            if e.case_id != self.case_id:
                raise ValueError(f"event case {e.case_id!r} != trace case {self.case_id!r}")
        stamps = [e.timestamp for e in self.events]
        if any(a > b for a, b in zip(stamps, stamps[1:])):
            raise ValueError("event timestamps must be non-decreasing")

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def prefix(self, k: int) -> "Trace":
        """First ``min(k, len)`` events; ``prefix(0)`` is the empty trace."""
        return Trace(self.case_id, self.events[:max(k, 0)])

    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)

    def timestamps(self) -> tuple[int, ...]:
        return tuple(e.timestamp for e in self.events)


def head(seq, k: int):
    """First ``min(k, len)`` elements of a sequence."""
    return seq[:max(k, 0)]


def tail(seq, k: int):
    """Last ``min(k, len)`` elements of a sequence."""
    if k <= 0:
        return seq[len(seq):]
    return seq[max(len(seq) - k, 0):]


def remaining_time(trace: Trace, i: int) -> int:
    """Seconds from the i-th event (1-based) to the trace's last event.

    Total function: returns 0 for the empty trace and for indexes
    outside ``[1, len(trace)]``.
    """
    n = len(trace)
    if n == 0 or i < 1 or i > n:
        return 0
    return trace.events[n - 1].timestamp - trace.events[i - 1].timestamp


def last_value(trace: Trace, slot: int):
    """Latest non-missing value of attribute slot ``slot``, or None."""
    for event in reversed(trace.events):
        if slot < len(event.attributes) and event.attributes[slot] is not None:
            return event.attributes[slot]
    return None


class Multiset:
    """Unordered collection whose elements carry positive multiplicities."""

    __slots__ = ("_counts",)

    def __init__(self, items: Iterable = ()):
        self._counts: dict = {}
        if isinstance(items, Mapping):
            for elem, count in items.items():
                self.add(elem, count)
        else:
            for elem in items:
                self.add(elem)

    def add(self, elem, count: int = 1) -> None:
        if count <= 0:
            raise ValueError("multiplicity must be positive")
        self._counts[elem] = self._counts.get(elem, 0) + count

    def count(self, elem) -> int:
        return self._counts.get(elem, 0)

    def counts(self) -> dict:
        return dict(self._counts)

    def elements(self):
        """Distinct elements (the root set)."""
        return self._counts.keys()

    def cardinality(self) -> int:
        """Sum of multiplicities."""
        return sum(self._counts.values())

    __len__ = cardinality

    def __contains__(self, elem) -> bool:
        return elem in self._counts

    def __iter__(self):
        """Iterate elements with multiplicity."""
        for elem, count in self._counts.items():
            for _ in range(count):
                yield elem

    def intersect(self, other: "Multiset") -> "Multiset":
        """Per-element minimum multiplicity."""
        out = Multiset()
        for elem, count in self._counts.items():
            m = min(count, other.count(elem))
            if m > 0:
                out.add(elem, m)
        return out

    def disjoint_union(self, other: "Multiset") -> "Multiset":
        """Per-element sum of multiplicities."""
        out = Multiset(self._counts)
        for elem, count in other._counts.items():
            out.add(elem, count)
        return out

    def union(self, other: "Multiset") -> "Multiset":
        """Per-element maximum multiplicity."""
        out = Multiset(self._counts)
        for elem, count in other._counts.items():
            m = max(count, out.count(elem))
            out._counts[elem] = m
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._counts == other._counts

    def __repr__(self) -> str:
        inner = ", ".join(f"{e!r}: {c}" for e, c in sorted(self._counts.items(), key=repr))
        return f"Multiset({{{inner}}})"


@dataclass(frozen=True)
class EventLog:
    """Immutable collection of complete traces plus the attribute schema."""

    traces: tuple[Trace, ...]
    schema: tuple[AttributeField, ...] = ()
    activity_alphabet: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        # canonical order makes parse(serialize(log)) the identity
        object.__setattr__(self, "traces", tuple(sorted(self.traces, key=lambda t: t.case_id)))
        seen = set()
        for t in self.traces:
            if t.case_id in seen:
                raise ValueError(f"duplicate case id {t.case_id!r}")
            seen.add(t.case_id)
            for e in t.events:
                if len(e.attributes) != len(self.schema):
                    raise ValueError(
                        f"event of case {t.case_id!r} has {len(e.attributes)} attribute slots, "
                        f"schema declares {len(self.schema)}"
                    )

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces)

    def trace(self, case_id: str) -> Trace:
        for t in self.traces:
            if t.case_id == case_id:
                return t
        raise KeyError(case_id)

    def attribute_index(self, name: str) -> int:
        for i, f in enumerate(self.schema):
            if f.name == name:
                return i
        raise KeyError(name)

    def replace_traces(self, traces: Iterable[Trace]) -> "EventLog":
        """Same schema, different trace subset (alphabet recomputed)."""
        kept = tuple(traces)
        alphabet = frozenset(e.activity for t in kept for e in t.events)
        return EventLog(kept, self.schema, alphabet)


def _parse_header(fields: list[str]) -> tuple[AttributeField, ...]:
    if fields[:3] != ["case_id", "activity", "timestamp"]:
        raise LogParseError(f"bad header {fields[:3]!r}, expected case_id,activity,timestamp", row=1)
    schema = []
    for col in fields[3:]:
        parts = col.split(":")
        if len(parts) != 3 or parts[0] != "attr":
            raise LogParseError(f"bad attribute column {col!r}", row=1)
        _, name, kind = parts
        if kind not in (NOMINAL, NUMERIC):
            raise LogParseError(f"unknown attribute kind {kind!r} in column {col!r}", row=1)
        schema.append(AttributeField(name, kind))
    return tuple(schema)


def parse_log(source, schema: tuple[AttributeField, ...] | None = None) -> EventLog:
    """Parse CSV text (or a text stream) into an EventLog.

    Events are grouped by case id and each trace is sorted by timestamp
    ascending with a stable sort, so equal timestamps keep file order.
    If ``schema`` is given it must match the header declaration.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise LogParseError("empty source, header required", row=1) from None
    declared = _parse_header([h.strip() for h in header])
    if schema is not None:
        bare = tuple(AttributeField(f.name, f.kind) for f in schema)
        if bare != declared:
            raise LogParseError(f"header schema {declared!r} does not match expected {bare!r}", row=1)

    width = 3 + len(declared)
    by_case: dict[str, list[Event]] = {}
    order: list[str] = []
    for row_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # ignore blank lines
        if len(row) != width:
            raise LogParseError(f"expected {width} fields, got {len(row)}", row=row_no)
        case_id, activity, stamp_text = row[0].strip(), row[1].strip(), row[2]
        if not case_id or not activity:
            raise LogParseError("case_id and activity must be non-empty", row=row_no)
        try:
            stamp = parse_timestamp(stamp_text)
        except ValueError as exc:
            raise LogParseError(str(exc), row=row_no) from None
        attrs = []
        for f, raw in zip(declared, row[3:]):
            text = raw.strip()
            if text in ("", "-"):
                attrs.append(None)
            elif f.kind == NUMERIC:
                try:
                    attrs.append(float(text))
                except ValueError:
                    raise LogParseError(
                        f"non-numeric value {text!r} in numeric column {f.name!r}", row=row_no
                    ) from None
            else:
                attrs.append(text)
        if case_id not in by_case:
            by_case[case_id] = []
            order.append(case_id)
        by_case[case_id].append(Event(activity, case_id, stamp, tuple(attrs)))

    traces = []
    for case_id in order:
        events = sorted(by_case[case_id], key=lambda e: e.timestamp)  # stable: ties keep file order
        traces.append(Trace(case_id, tuple(events)))

    alphabet = frozenset(e.activity for t in traces for e in t.events)
    universes: list[set] = [set() for _ in declared]
    for t in traces:
        for e in t.events:
            for i, f in enumerate(declared):
                if f.kind == NOMINAL and e.attributes[i] is not None:
                    universes[i].add(e.attributes[i])
    final_schema = tuple(
        AttributeField(f.name, f.kind, tuple(sorted(universes[i])) if f.kind == NOMINAL else ())
        for i, f in enumerate(declared)
    )
    return EventLog(tuple(traces), final_schema, alphabet)


def _format_number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def serialize_log(log: EventLog) -> str:
    """Render an EventLog in the CSV interchange format.

    Deterministic: traces ordered by case id ascending, events in
    positional order, missing values emitted as empty fields.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["case_id", "activity", "timestamp"]
    header += [f"attr:{f.name}:{f.kind}" for f in log.schema]
    writer.writerow(header)
    for trace in sorted(log.traces, key=lambda t: t.case_id):
        for event in trace.events:
            row = [event.case_id, event.activity, format_timestamp(event.timestamp)]
            for f, value in zip(log.schema, event.attributes):
                if value is None:
                    row.append("")
                elif f.kind == NUMERIC:
                    row.append(_format_number(value))
                else:
                    row.append(str(value))
            writer.writerow(row)
    return out.getvalue()


def variants(log: EventLog) -> dict[tuple[str, ...], list[str]]:
    """Group case ids by their activity-sequence projection."""
    groups: dict[tuple[str, ...], list[str]] = {}
    for trace in log.traces:
        groups.setdefault(trace.activities(), []).append(trace.case_id)
    return groups
