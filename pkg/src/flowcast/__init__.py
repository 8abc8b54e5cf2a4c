"""Predictive monitoring of running business process cases.

Learns from historical event logs and predicts, for a partial trace,
the remaining time to completion and the most likely sequence of
future activities.  See the README for the CLI and the JSON service.
"""

__version__ = "0.1.0"

from .abstraction import StateAbstraction
from .eventlog import Event, EventLog, LogParseError, Multiset, Trace, parse_log, serialize_log
from .transition_system import TransitionSystem, build_transition_system

__all__ = [
    "Event",
    "EventLog",
    "LogParseError",
    "Multiset",
    "StateAbstraction",
    "Trace",
    "TransitionSystem",
    "build_transition_system",
    "parse_log",
    "serialize_log",
    "__version__",
]
