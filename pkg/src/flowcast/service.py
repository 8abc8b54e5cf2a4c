"""Online prediction service speaking JSON over HTTP.

Endpoints:

* ``POST /predict`` -- body ``{"events": [{"activity", "timestamp",
  "attributes"?}, ...], "deadline"?, "model"?}``; answers with the
  remaining time, predicted completion, deadline alarm, the predicted
  future activity path (dats models), and up to two comparable
  historical traces.
* ``GET /models``   -- the loaded model archives.
* ``GET /health``   -- liveness.

Responses are pure functions of (loaded models, request); bodies are
rendered with sorted keys so identical queries produce identical bytes.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .archive import TraceRef, load_model
from .encoding import NOMINAL
from .eventlog import Event, Trace, format_timestamp, parse_timestamp
from .predictors import DATS, PredictorModel, predict_path, predict_remaining_detailed


class RequestError(ValueError):
    """Invalid query payload; maps to a 400 response."""

    def __init__(self, message: str, code: str = "invalid_request"):
        super().__init__(message)
        self.code = code


@dataclass
class LoadedModel:
    model_id: str
    model: PredictorModel
    history: list[TraceRef]


class PredictionService:
    """Holds immutable loaded models and answers queries."""

    def __init__(self):
        self._models: dict[str, LoadedModel] = {}

    def add_model(self, model_id: str, model: PredictorModel,
                  history: list[TraceRef] | None = None) -> None:
        self._models[model_id] = LoadedModel(model_id, model, list(history or ()))

    def load_archive(self, path, model_id: str | None = None) -> str:
        model, history = load_model(path)
        if model_id is None:
            model_id = str(path).rsplit("/", 1)[-1].removesuffix(".json")
        self.add_model(model_id, model, history)
        return model_id

    def default_model_id(self) -> str:
        if not self._models:
            raise RequestError("no models loaded", code="no_models")
        return next(iter(self._models))

    def models_document(self) -> dict:
        return {
            "models": [
                {
                    "id": lm.model_id,
                    "variant": lm.model.variant,
                    "abstraction": lm.model.spec.abstraction.spelling(),
                    "history_traces": len(lm.history),
                }
                for lm in self._models.values()
            ]
        }

    def _trace_from_events(self, model: PredictorModel, events: list) -> Trace:
        if not isinstance(events, list) or not events:
            raise RequestError("events must be a non-empty list")
        name_to_slot = {enc.name: i for i, enc in enumerate(model.schema.attributes)}
        parsed = []
        last_stamp = None
        for pos, entry in enumerate(events):
            if not isinstance(entry, dict):
                raise RequestError(f"events[{pos}] must be an object")
            activity = entry.get("activity")
            if not isinstance(activity, str) or not activity:
                raise RequestError(f"events[{pos}].activity must be a non-empty string")
            try:
                stamp = parse_timestamp(str(entry.get("timestamp")))
            except ValueError:
                raise RequestError(f"events[{pos}].timestamp is unparseable") from None
            if last_stamp is not None and stamp < last_stamp:
                raise RequestError("event timestamps must be non-decreasing")
            last_stamp = stamp
            attrs: list = [None] * len(model.schema.attributes)
            given = entry.get("attributes") or {}
            if not isinstance(given, dict):
                raise RequestError(f"events[{pos}].attributes must be an object")
            for name, value in given.items():
                slot = name_to_slot.get(name)
                if slot is None or value is None:
                    continue  # unknown attributes are ignored
                enc = model.schema.attributes[slot]
                if enc.kind == NOMINAL:
                    attrs[slot] = str(value)
                else:
                    try:
                        attrs[slot] = float(value)
                    except (TypeError, ValueError):
                        raise RequestError(
                            f"events[{pos}].attributes[{name!r}] must be numeric") from None
            parsed.append(Event(activity, "query", stamp, tuple(attrs)))
        return Trace("query", tuple(parsed))

    def predict_document(self, request: dict) -> dict:
        """Answer one /predict query; raises RequestError on bad input."""
        if not isinstance(request, dict):
            raise RequestError("request body must be a JSON object")
        model_id = request.get("model") or self.default_model_id()
        loaded = self._models.get(model_id)
        if loaded is None:
            raise RequestError(f"unknown model {model_id!r}", code="unknown_model")
        model = loaded.model
        trace = self._trace_from_events(model, request.get("events"))

        deadline = None
        if request.get("deadline") is not None:
            try:
                deadline = parse_timestamp(str(request["deadline"]))
            except ValueError:
                raise RequestError("deadline is unparseable") from None

        result = predict_remaining_detailed(model, trace)
        remaining = int(round(result.seconds))
        completion = trace.events[-1].timestamp + remaining

        path_doc = None
        predicted_path: tuple[str, ...] = ()
        if model.variant == DATS:
            path = predict_path(model, trace)
            if path.reachable:
                predicted_path = path.activities
                path_doc = {
                    "activities": list(path.activities),
                    "probability": path.probability,
                }

        similar = find_similar(loaded.history, trace.activities(), predicted_path)
        return {
            "remaining_seconds": remaining,
            "predicted_completion": format_timestamp(completion),
            "alarm": deadline is not None and completion > deadline,
            "path": path_doc,
            "similar": similar,
            "model": {
                "id": loaded.model_id,
                "variant": model.variant,
                "used_safety_prefix": result.used_safety,
                "used_global_fallback": result.used_global_fallback,
            },
        }


def find_similar(history: list[TraceRef], running: tuple[str, ...],
                 predicted_path: tuple[str, ...]) -> list[dict]:
    """Up to two best historical comparisons for a running case.

    Slot one: the fastest historical trace whose activities start with
    the running case's activity sequence, regardless of what follows.
    Slot two: the fastest one whose continuation equals the predicted
    future path.  Speed means remaining time measured at the shared
    prefix (total duration when the running case is empty).
    """
    length = len(running)
    matching = [h for h in history if h.activities[:length] == running]
    out = []
    if matching:
        fastest = min(matching, key=lambda h: (h.remaining_after(length), h.case_id))
        out.append(_similar_entry("fastest_prefix", fastest, length))
    if predicted_path:
        exact = [h for h in matching if h.activities[length:] == predicted_path]
        if exact:
            fastest = min(exact, key=lambda h: (h.remaining_after(length), h.case_id))
            out.append(_similar_entry("fastest_predicted_path", fastest, length))
    return out


def _similar_entry(kind: str, ref: TraceRef, length: int) -> dict:
    return {
        "kind": kind,
        "case_id": ref.case_id,
        "activities": list(ref.activities),
        "remaining_seconds": ref.remaining_after(length),
    }


def _json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True) + "\n").encode("utf-8")


class _Handler(BaseHTTPRequestHandler):
    service: PredictionService  # set on the server class

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, doc: dict) -> None:
        body = _json_bytes(doc)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {"status": "ok"})
        elif self.path == "/models":
            self._send(200, self.server.service.models_document())
        else:
            self._send(404, {"error": {"code": "not_found", "message": self.path}})

    def do_POST(self):
        if self.path != "/predict":
            self._send(404, {"error": {"code": "not_found", "message": self.path}})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length)
            request = json.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            self._send(400, {"error": {"code": "bad_json", "message": "body is not valid JSON"}})
            return
        try:
            self._send(200, self.server.service.predict_document(request))
        except RequestError as exc:
            self._send(400, {"error": {"code": exc.code, "message": str(exc)}})
        except Exception as exc:  # defensive: never leak a stack trace
            self._send(500, {"error": {"code": "internal", "message": str(exc)}})


class PredictionServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], service: PredictionService):
        super().__init__(address, _Handler)
        self.service = service


def serve(archives, host: str = "127.0.0.1", port: int = 8080,
          background: bool = False) -> PredictionServer:
    """Load archives and run the HTTP service.

    With ``background=True`` the server runs in a daemon thread and the
    call returns immediately (used by tests and embedding code).
    """
    service = PredictionService()
    for path in archives:
        service.load_archive(path)
    server = PredictionServer((host, port), service)
    if background:
        threading.Thread(target=server.serve_forever, daemon=True).start()
        return server
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return server
