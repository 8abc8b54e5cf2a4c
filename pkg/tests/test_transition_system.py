import random

import numpy as np
import pytest

from flowcast.abstraction import StateAbstraction, represent_state
from flowcast.eventlog import Trace
from flowcast.transition_system import (build_transition_system, encode_state,
                                        map_state, safety_prefix, to_dot,
                                        ts_from_dict, ts_to_dict)

from conftest import make_log, make_trace

THREE_VARIANTS = ["ABCF", "ABDF", "ABEF"]


@pytest.fixture(scope="module")
def full_set_ts():
    return build_transition_system(make_log(THREE_VARIANTS), StateAbstraction("set"))


def test_last_event_abstraction_shape():
    ts = build_transition_system(make_log(THREE_VARIANTS), StateAbstraction("set", horizon=1))
    assert ts.state_count() == 7
    assert len(ts.transitions) == 8
    assert ts.accepting_states == {frozenset("F")}


def test_full_set_abstraction_shape(full_set_ts):
    ts = full_set_ts
    assert ts.state_count() == 9
    assert len(ts.transitions) == 8
    assert ts.accepting_states == {frozenset("ABCF"), frozenset("ABDF"), frozenset("ABEF")}


def test_state_enumeration_is_level_ordered(full_set_ts):
    expected = [frozenset("A"), frozenset("AB"), frozenset("ABC"), frozenset("ABD"),
                frozenset("ABE"), frozenset("ABCF"), frozenset("ABDF"), frozenset("ABEF")]
    assert list(full_set_ts.state_order) == expected


def test_single_trace_shape():
    ts = build_transition_system(make_log(["A"]), StateAbstraction("set"))
    assert ts.state_count() == 2
    assert len(ts.transitions) == 1


def test_map_state(full_set_ts):
    state, fitting = map_state(full_set_ts, make_trace("c", "AB"))
    assert state == frozenset("AB") and fitting
    state, fitting = map_state(full_set_ts, make_trace("c", "AD"))
    assert state == frozenset("AD") and not fitting
    state, fitting = map_state(full_set_ts, make_trace("c", ""))
    assert state == full_set_ts.start_state and fitting


def test_every_training_trace_is_compliant(full_set_ts):
    ts = full_set_ts
    for seq in THREE_VARIANTS:
        trace = make_trace("c", seq)
        states = [represent_state(ts.abstraction, trace.prefix(k))
                  for k in range(len(trace) + 1)]
        assert states[0] == ts.start_state
        assert states[-1] in ts.accepting_states
        for k in range(len(trace)):
            assert (states[k], seq[k], states[k + 1]) in ts.transitions


def test_build_is_order_insensitive():
    logs = [make_log(perm) for perm in
            (THREE_VARIANTS, THREE_VARIANTS[::-1], [THREE_VARIANTS[1], THREE_VARIANTS[2], THREE_VARIANTS[0]])]
    systems = [build_transition_system(lg, StateAbstraction("set")) for lg in logs]
    for ts in systems[1:]:
        assert ts.states == systems[0].states
        assert ts.transitions == systems[0].transitions
        assert ts.accepting_states == systems[0].accepting_states


def test_empty_log_rejected():
    from flowcast.eventlog import EventLog
    with pytest.raises(ValueError):
        build_transition_system(EventLog((), (), frozenset()), StateAbstraction("set"))


# -- state vectors -----------------------------------------------------------

WORKED_SIMILARITIES = [1 / 2, 1 / 3, 1 / 4, 2 / 3, 1 / 4, 1 / 5, 2 / 4, 1 / 5]


def test_non_fitting_vector_reproduces_worked_example(full_set_ts):
    vec = encode_state(full_set_ts, make_trace("c", "AD"))
    total = sum(WORKED_SIMILARITIES)
    expected = np.array(WORKED_SIMILARITIES) / total
    assert np.allclose(vec, expected, atol=1e-9)
    assert vec.sum() == pytest.approx(1.0, abs=1e-9)


def test_fitting_vector_is_one_hot(full_set_ts):
    vec = encode_state(full_set_ts, make_trace("c", "AB"))
    assert vec.sum() == 1.0
    assert np.count_nonzero(vec) == 1
    assert vec[full_set_ts.state_index(frozenset("AB"))] == 1.0


def test_empty_trace_encodes_to_zero(full_set_ts):
    assert not encode_state(full_set_ts, make_trace("c", "")).any()


def test_non_fitting_vectors_sum_to_one(full_set_ts):
    rng = random.Random(7)
    for _ in range(50):
        seq = "".join(rng.choice("ABCDEFGH") for _ in range(rng.randint(1, 6)))
        trace = make_trace("c", seq)
        _, fitting = map_state(full_set_ts, trace)
        if fitting:
            continue
        assert encode_state(full_set_ts, trace).sum() == pytest.approx(1.0, abs=1e-9)


def test_degenerate_encoding_goes_uniform(full_set_ts, caplog):
    # a similarity that sees nothing in common anywhere
    vec = encode_state(full_set_ts, make_trace("c", "XY"), similarity=lambda a, b: 0.0)
    assert np.allclose(vec, 1.0 / len(full_set_ts.state_order))


# -- safety mechanism --------------------------------------------------------

def _longest_fitting_prefix(ts, trace):
    return max(k for k in range(len(trace) + 1)
               if ts.has_state(represent_state(ts.abstraction, trace.prefix(k))))


def test_safety_prefix_trims_unseen_suffix(full_set_ts):
    trace = make_trace("c", "ABX")
    result = safety_prefix(full_set_ts, trace)
    assert result.state == frozenset("AB")
    assert result.prefix_length == _longest_fitting_prefix(full_set_ts, trace) == 2
    assert not result.fell_back_to_start


def test_safety_prefix_keeps_fitting_traces(full_set_ts):
    for seq in ("A", "AB", "ABC", "ABCF"):
        trace = make_trace("c", seq)
        result = safety_prefix(full_set_ts, trace)
        assert result.prefix_length == len(seq)
        assert result.state == map_state(full_set_ts, trace)[0]
        assert not result.fell_back_to_start


def test_safety_prefix_falls_back_to_start(full_set_ts):
    result = safety_prefix(full_set_ts, make_trace("c", "XYZ"))
    assert result.state == full_set_ts.start_state
    assert result.prefix_length == 0
    assert result.fell_back_to_start


def test_safety_prefix_random_against_oracle(full_set_ts):
    rng = random.Random(13)
    for _ in range(60):
        seq = "".join(rng.choice("ABCDEFX") for _ in range(rng.randint(0, 6)))
        trace = make_trace("c", seq)
        assert safety_prefix(full_set_ts, trace).prefix_length == \
            _longest_fitting_prefix(full_set_ts, trace)


# -- export / serialization --------------------------------------------------

def test_dot_export(full_set_ts):
    dot = to_dot(full_set_ts)
    assert dot.startswith("digraph")
    assert dot.count("doublecircle") == 3
    assert '"{A, B}"' in dot


def test_dict_round_trip(full_set_ts):
    data = ts_to_dict(full_set_ts)
    clone = ts_from_dict(data)
    assert clone.state_order == full_set_ts.state_order
    assert clone.transitions == full_set_ts.transitions
    assert clone.accepting_states == full_set_ts.accepting_states
    assert clone.start_state == full_set_ts.start_state
    # encodings are reproducible across the round trip
    trace = make_trace("c", "AD")
    assert np.array_equal(encode_state(clone, trace), encode_state(full_set_ts, trace))


def test_dict_round_trip_other_kinds():
    for kind in ("multiset", "sequence"):
        ts = build_transition_system(make_log(["ABB", "AB"]), StateAbstraction(kind))
        clone = ts_from_dict(ts_to_dict(ts))
        assert clone.states == ts.states
        assert clone.transitions == ts.transitions
