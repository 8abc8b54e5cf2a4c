import pytest

from flowcast.eventlog import Event, EventLog, Trace, parse_log

# The running example log: three cases, four events each, with a resource,
# a category that appears from the second event on, and a numeric amount.
TABLE_CSV = """\
case_id,activity,timestamp,attr:resource:nominal,attr:category:nominal,attr:amount:numeric
65923,A,20-02-2002:11.11,Jack,-,1000
65923,B,20-02-2002:13.31,Jack,Gold,1000
65923,C,21-02-2002:08.40,John,Gold,900
65923,F,22-02-2002:15.51,Joe,Gold,900
65924,A,19-02-2002:09.10,Jack,-,200
65924,B,19-02-2002:13.22,John,Standard,200
65924,D,20-02-2002:17.17,John,Standard,200
65924,F,21-02-2002:10.38,Joe,Standard,200
65925,A,25-02-2002:10.50,Jack,-,850
65925,B,25-02-2002:13.01,John,Gold,850
65925,E,25-02-2002:16.42,Joe,Gold,500
65925,F,26-02-2002:09.30,Joe,Gold,500
"""


@pytest.fixture(scope="session")
def table_log() -> EventLog:
    return parse_log(TABLE_CSV)


def make_trace(case_id: str, activities, start: int = 0, gap: int = 3600,
               attributes=None, width: int = 0) -> Trace:
    """Trace with evenly spaced events and optional fixed attribute slots."""
    attrs = tuple(attributes) if attributes is not None else (None,) * width
    events = tuple(
        Event(a, case_id, start + i * gap, attrs) for i, a in enumerate(activities)
    )
    return Trace(case_id, events)


def make_log(sequences, gap: int = 3600, width: int = 0, schema=()) -> EventLog:
    """Log of plain control-flow traces: one trace per activity string."""
    traces = tuple(
        make_trace(f"c{i:03d}", seq, start=i * 100_000, gap=gap, width=width)
        for i, seq in enumerate(sequences)
    )
    alphabet = frozenset(a for seq in sequences for a in seq)
    return EventLog(traces, tuple(schema), alphabet)
