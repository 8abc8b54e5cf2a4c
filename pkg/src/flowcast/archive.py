"""Self-describing model archive: one JSON file per trained predictor.

The container carries a format identifier and version; loading a
mismatched version fails loudly.  All numeric parameters round-trip at
full double precision.  Optionally the training traces are embedded as
compact references (case id, activities, timestamps) to power the
similar-trace lookup of the query service.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .encoding import AttributeEncoder, EncodingSchema
from .eventlog import NOMINAL, EventLog, Multiset
from .naive_bayes import NaiveBayes
from .predictors import (ConstantEstimator, MeasurementAnnotation,
                         PredictorModel, PredictorSpec)
from .svr import SVRModel
from .transition_system import (state_from_jsonable, state_to_jsonable,
                                ts_from_dict, ts_to_dict)

FORMAT = "flowcast-model"
VERSION = 1


class ArchiveError(ValueError):
    """Raised for unreadable, mismatched or corrupt archives."""


@dataclass(frozen=True)
class TraceRef:
    """Compact view of a historical trace for similarity lookups."""

    case_id: str
    activities: tuple[str, ...]
    timestamps: tuple[int, ...]

    def remaining_after(self, position: int) -> int:
        """Remaining seconds after the ``position``-th event (0 = whole case)."""
        if not self.timestamps:
            return 0
        anchor = max(position, 1) - 1
        return self.timestamps[-1] - self.timestamps[min(anchor, len(self.timestamps) - 1)]


def _schema_to_dict(schema: EncodingSchema) -> dict:
    return {
        "activities": list(schema.activities),
        "attributes": [
            {"name": a.name, "kind": a.kind, "values": list(a.values),
             "low": a.low, "high": a.high}
            for a in schema.attributes
        ],
        "state_dim": schema.state_dim,
    }


def _schema_from_dict(data: dict) -> EncodingSchema:
    return EncodingSchema(
        tuple(data["activities"]),
        tuple(
            AttributeEncoder(a["name"], a["kind"],
                             tuple(a["values"]) if a["kind"] == NOMINAL else (),
                             a.get("low"), a.get("high"))
            for a in data["attributes"]
        ),
        data["state_dim"],
    )


def _estimator_to_dict(estimator) -> dict:
    if isinstance(estimator, ConstantEstimator):
        return {"type": "constant", "value": estimator.value}
    return {"type": "svr", **estimator.to_dict()}


def _estimator_from_dict(data: dict):
    if data["type"] == "constant":
        return ConstantEstimator(data["value"])
    return SVRModel.from_dict(data)


def model_to_dict(model: PredictorModel, history: EventLog | None = None) -> dict:
    abstraction = model.spec.abstraction
    enc = lambda s: state_to_jsonable(s, abstraction)

    doc: dict = {
        "format": FORMAT,
        "version": VERSION,
        "variant": model.variant,
        "spec": model.spec.to_dict(),
        "schema": _schema_to_dict(model.schema),
        "global_mean": model.global_mean,
        "training_summary": model.training_summary,
        "transition_system": ts_to_dict(model.ts) if model.ts is not None else None,
    }

    if model.annotation is not None:
        index = {s: i for i, s in enumerate(model.ts.state_order)}
        index[model.ts.start_state] = -1
        doc["annotation"] = {
            "statistic": model.annotation.statistic,
            "measurements": [
                [enc(state), sorted(values.counts().items())]
                for state, values in sorted(model.annotation.measurements.items(),
                                            key=lambda kv: index[kv[0]])
            ],
        }
    if model.regressor is not None:
        doc["regressor"] = model.regressor.to_dict()
    if model.variant == "dats":
        index = {s: i for i, s in enumerate(model.ts.state_order)}
        index[model.ts.start_state] = -1
        doc["nb_models"] = [
            [enc(state), model.nb_models[state].to_dict(encode_label=enc)]
            for state in sorted(model.nb_models, key=lambda s: index[s])
        ]
        doc["transition_models"] = [
            [enc(src), label, enc(dst), _estimator_to_dict(est)]
            for (src, label, dst), est in sorted(
                model.transition_models.items(),
                key=lambda kv: (index[kv[0][0]], kv[0][1], index[kv[0][2]]))
        ]
    if history is not None:
        doc["history"] = [
            {"case_id": t.case_id,
             "activities": list(t.activities()),
             "timestamps": list(t.timestamps())}
            for t in history
        ]
    else:
        doc["history"] = None
    return doc


def model_from_dict(doc: dict) -> tuple[PredictorModel, list[TraceRef]]:
    if doc.get("format") != FORMAT:
        raise ArchiveError(f"not a {FORMAT} archive")
    if doc.get("version") != VERSION:
        raise ArchiveError(f"archive version {doc.get('version')} unsupported, expected {VERSION}")
    spec = PredictorSpec.from_dict(doc["spec"])
    abstraction = spec.abstraction
    dec = lambda d: state_from_jsonable(d, abstraction)

    ts = ts_from_dict(doc["transition_system"]) if doc.get("transition_system") else None
    annotation = None
    if "annotation" in doc:
        measurements = {}
        for state_enc, counted in doc["annotation"]["measurements"]:
            values = Multiset()
            for value, count in counted:
                values.add(value, count)
            measurements[dec(state_enc)] = values
        annotation = MeasurementAnnotation(measurements, doc["annotation"]["statistic"])
    regressor = SVRModel.from_dict(doc["regressor"]) if "regressor" in doc else None
    nb_models = {}
    transition_models = {}
    if doc["variant"] == "dats":
        for state_enc, nb_doc in doc["nb_models"]:
            nb_models[dec(state_enc)] = NaiveBayes.from_dict(
                nb_doc, decode_label=lambda d: dec(d))
        for src_enc, label, dst_enc, est_doc in doc["transition_models"]:
            transition_models[(dec(src_enc), label, dec(dst_enc))] = _estimator_from_dict(est_doc)

    model = PredictorModel(
        variant=doc["variant"],
        spec=spec,
        schema=_schema_from_dict(doc["schema"]),
        global_mean=doc["global_mean"],
        ts=ts,
        annotation=annotation,
        regressor=regressor,
        nb_models=nb_models,
        transition_models=transition_models,
        training_summary=doc.get("training_summary", {}),
    )
    history = [
        TraceRef(h["case_id"], tuple(h["activities"]), tuple(h["timestamps"]))
        for h in doc.get("history") or ()
    ]
    return model, history


def save_model(model: PredictorModel, path, history: EventLog | None = None) -> None:
    """Write the archive; deterministic bytes for identical inputs."""
    doc = model_to_dict(model, history)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> tuple[PredictorModel, list[TraceRef]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"corrupt archive {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ArchiveError(f"corrupt archive {path}: expected a JSON object")
    return model_from_dict(doc)
