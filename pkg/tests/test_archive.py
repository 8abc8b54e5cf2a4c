import json

import numpy as np
import pytest

from flowcast.abstraction import StateAbstraction
from flowcast.archive import ArchiveError, load_model, save_model
from flowcast.predictors import (PredictorSpec, predict_path,
                                 predict_remaining, train_dats,
                                 train_predictor, train_vda)

from conftest import make_log, make_trace

SET = StateAbstraction("set")


@pytest.mark.parametrize("variant", ["vda", "svr", "svr_ts", "dats"])
def test_round_trip_preserves_predictions(tmp_path, table_log, variant):
    spec = PredictorSpec(variant, SET, C=100.0, epsilon=100.0)
    model = train_predictor(table_log, spec)
    path = tmp_path / f"{variant}.json"
    save_model(model, path, history=table_log)
    clone, history = load_model(path)
    assert clone.variant == variant
    assert len(history) == 3
    for seq in ("A", "AB", "ABC", "ABD", "ABZ"):
        trace = make_trace("q", seq, attributes=(None, "Gold", 500.0))
        assert predict_remaining(clone, trace) == pytest.approx(
            predict_remaining(model, trace), abs=1e-9)


def test_round_trip_preserves_paths(tmp_path, table_log):
    model = train_dats(table_log, PredictorSpec("dats", SET))
    path_file = tmp_path / "m.json"
    save_model(model, path_file)
    clone, history = load_model(path_file)
    assert history == []
    for seq in ("A", "AB"):
        trace = make_trace("q", seq, attributes=(None, None, None))
        assert predict_path(clone, trace) == predict_path(model, trace)


def test_archives_are_byte_identical_for_same_input(tmp_path, table_log):
    model1 = train_dats(table_log, PredictorSpec("dats", SET, seed=3))
    model2 = train_dats(table_log, PredictorSpec("dats", SET, seed=3))
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_model(model1, p1, history=table_log)
    save_model(model2, p2, history=table_log)
    assert p1.read_bytes() == p2.read_bytes()


def test_version_mismatch_fails_loudly(tmp_path, table_log):
    model = train_vda(table_log, SET)
    target = tmp_path / "m.json"
    save_model(model, target)
    doc = json.loads(target.read_text())
    doc["version"] = 99
    target.write_text(json.dumps(doc))
    with pytest.raises(ArchiveError, match="version"):
        load_model(target)
    doc["format"] = "something-else"
    target.write_text(json.dumps(doc))
    with pytest.raises(ArchiveError, match="archive"):
        load_model(target)


def test_corrupt_archive_fails_loudly(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(ArchiveError, match="corrupt"):
        load_model(bad)
    array = tmp_path / "array.json"
    array.write_text("[1, 2, 3]")
    with pytest.raises(ArchiveError):
        load_model(array)


def test_multiset_and_sequence_abstractions_round_trip(tmp_path):
    log = make_log(["ABBA", "ABA", "AB"])
    for kind in ("multiset", "sequence"):
        model = train_dats(log, PredictorSpec("dats", StateAbstraction(kind)))
        target = tmp_path / f"{kind}.json"
        save_model(model, target)
        clone, _ = load_model(target)
        probe = make_trace("q", "ABB")
        assert predict_remaining(clone, probe) == pytest.approx(
            predict_remaining(model, probe), abs=1e-9)
