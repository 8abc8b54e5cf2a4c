import random

import pytest

from flowcast.eventlog import (Event, LogParseError, Multiset, Trace, head,
                               last_value, parse_log, parse_timestamp,
                               remaining_time, serialize_log, tail, variants)

from conftest import TABLE_CSV, make_trace


def test_parse_groups_and_sorts(table_log):
    assert len(table_log) == 3
    assert all(len(t) == 4 for t in table_log)
    assert table_log.trace("65923").activities() == ("A", "B", "C", "F")
    assert table_log.trace("65924").activities() == ("A", "B", "D", "F")
    assert table_log.trace("65925").activities() == ("A", "B", "E", "F")
    assert table_log.activity_alphabet == frozenset("ABCDEF")


def test_parse_schema_universe(table_log):
    by_name = {f.name: f for f in table_log.schema}
    assert by_name["category"].values == ("Gold", "Standard")
    assert by_name["resource"].values == ("Jack", "Joe", "John")
    assert by_name["amount"].kind == "numeric"


def test_parse_empty_source_with_header():
    log = parse_log("case_id,activity,timestamp\n")
    assert len(log) == 0
    assert log.schema == ()


def test_parse_shuffled_rows_matches_sorted_input():
    header, *rows = TABLE_CSV.strip().splitlines()
    rng = random.Random(5)
    shuffled = rows[:]
    rng.shuffle(shuffled)
    # oracle: sorting rows by (case, timestamp) before parsing
    sorted_rows = sorted(rows, key=lambda r: (r.split(",")[0], parse_timestamp(r.split(",")[2])))
    assert parse_log("\n".join([header, *shuffled])) == parse_log("\n".join([header, *sorted_rows]))


def test_parse_rejects_bad_arity():
    text = "case_id,activity,timestamp\nc1,A,100,extra\n"
    with pytest.raises(LogParseError, match="row 2"):
        parse_log(text)


def test_parse_rejects_bad_timestamp():
    text = "case_id,activity,timestamp\nc1,A,100\nc1,B,whenever\n"
    with pytest.raises(LogParseError, match="row 3"):
        parse_log(text)


def test_parse_rejects_non_numeric():
    text = "case_id,activity,timestamp,attr:amount:numeric\nc1,A,100,lots\n"
    with pytest.raises(LogParseError, match="non-numeric"):
        parse_log(text)


def test_parse_missing_markers_map_to_none():
    text = ("case_id,activity,timestamp,attr:cat:nominal,attr:amount:numeric\n"
            "c1,A,100,-,\n")
    log = parse_log(text)
    assert log.trace("c1").events[0].attributes == (None, None)


def test_equal_timestamps_keep_file_order():
    text = "case_id,activity,timestamp\nc1,X,100\nc1,Y,100\nc1,Z,100\n"
    assert parse_log(text).trace("c1").activities() == ("X", "Y", "Z")


def test_timestamp_formats():
    assert parse_timestamp("1970-01-01T00:00:10") == 10
    assert parse_timestamp("1970-01-01T00:00:10Z") == 10
    assert parse_timestamp("1970-01-01 00:00:10+00:00") == 10
    assert parse_timestamp("01-01-1970:00.10") == 600
    assert parse_timestamp("12345") == 12345


def test_remaining_time_table_values(table_log):
    t = table_log.trace("65923")
    assert remaining_time(t, 1) == 189600  # 20-02 11:11 to 22-02 15:51
    assert remaining_time(t, len(t)) == 0
    assert remaining_time(Trace("x"), 3) == 0
    assert remaining_time(t, 0) == 0
    assert remaining_time(t, 99) == 0


def test_remaining_time_monotone_and_telescoping():
    rng = random.Random(11)
    for _ in range(50):
        n = rng.randint(1, 8)
        stamps = sorted(rng.randint(0, 10_000) for _ in range(n))
        trace = Trace("c", tuple(Event("a", "c", s) for s in stamps))
        rems = [remaining_time(trace, i) for i in range(1, n + 1)]
        assert all(a >= b for a, b in zip(rems, rems[1:]))
        for i in range(1, n):
            gap = stamps[i] - stamps[i - 1]
            assert rems[i - 1] == rems[i] + gap


def test_last_value(table_log):
    cat = table_log.attribute_index("category")
    amount = table_log.attribute_index("amount")
    t3 = table_log.trace("65923")
    assert last_value(t3, cat) == "Gold"
    assert last_value(t3.prefix(1), cat) is None  # first event has "-"
    assert last_value(table_log.trace("65925"), amount) == 500  # updated at third event


def test_prefix_semantics(table_log):
    t = table_log.trace("65923")
    assert len(t.prefix(0)) == 0
    assert t.prefix(2).activities() == ("A", "B")
    assert t.prefix(99) == t


def test_head_and_tail():
    seq = ("a", "b", "c", "d")
    assert head(seq, 2) == ("a", "b")
    assert head(seq, 9) == seq
    assert tail(seq, 2) == ("c", "d")
    assert tail(seq, 9) == seq
    assert tail(seq, 0) == ()


def test_variants(table_log):
    groups = variants(table_log)
    assert len(groups) == 3
    assert all(len(cases) == 1 for cases in groups.values())

    single = parse_log("case_id,activity,timestamp\nc1,A,1\nc1,B,2\n")
    assert len(variants(single)) == 1

    dup = parse_log(
        "case_id,activity,timestamp,attr:x:nominal\n"
        "c1,A,1,u\nc1,B,2,u\nc2,A,5,v\nc2,B,6,v\n"
    )
    groups = variants(dup)
    assert len(groups) == 1
    assert sorted(groups[("A", "B")]) == ["c1", "c2"]


def test_serialize_round_trip(table_log):
    assert parse_log(serialize_log(table_log)) == table_log


def test_serialize_is_deterministic(table_log):
    assert serialize_log(table_log) == serialize_log(table_log)


def test_trace_validation():
    with pytest.raises(ValueError):
        Trace("c", (Event("a", "other", 1),))
    with pytest.raises(ValueError):
        Trace("c", (Event("a", "c", 5), Event("b", "c", 1)))
    with pytest.raises(ValueError):
        Event("a", "c", -1)


def test_multiset_laws_exhaustive():
    # all multisets over {a, b} with multiplicities 0..2
    universe = []
    for ca in range(3):
        for cb in range(3):
            counts = {}
            if ca:
                counts["a"] = ca
            if cb:
                counts["b"] = cb
            universe.append(Multiset(counts))
    for x in universe:
        for y in universe:
            union = x.disjoint_union(y)
            assert union.cardinality() == x.cardinality() + y.cardinality()
            inter = x.intersect(y)
            for elem in ("a", "b"):
                assert inter.count(elem) == min(x.count(elem), y.count(elem))
            assert x.union(y).count("a") == max(x.count("a"), y.count("a"))


def test_multiset_iteration_and_counts():
    m = Multiset(["x", "x", "y"])
    assert sorted(m) == ["x", "x", "y"]
    assert m.count("x") == 2 and m.count("z") == 0
    assert len(m) == 3
    with pytest.raises(ValueError):
        m.add("x", 0)
