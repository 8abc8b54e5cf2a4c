"""The four remaining-time predictors behind one interface.

Variants:

* ``vda``   -- visit-duration averaging: each transition-system state keeps
  the multiset of historical remaining times observed there; prediction
  is a statistic (mean or median) of the current state's multiset.
* ``svr``   -- one support vector regressor over trace feature vectors.
* ``svr_ts`` -- the same regressor with a state-context block appended;
  prefixes that do not map onto a known state are soft-encoded by
  normalized state similarity.
* ``dats``  -- data-aware transition system: a Naive Bayes classifier per
  branching state estimates where the case goes next, a regressor per
  transition estimates the remaining time for that continuation, and the
  prediction is the probability-weighted average.  The same model yields
  the most likely future activity path via a cheapest-path search under
  edge costs -ln(transition probability).
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .abstraction import StateAbstraction, event_label
from .encoding import EncodingSchema, build_training_set, encode, fit_schema
from .eventlog import EventLog, Multiset, Trace, remaining_time
from .naive_bayes import NaiveBayes
from .svr import (DEFAULT_C_GRID, DEFAULT_GAMMA_GRID, DEFAULT_MAX_ITER,
                  DEFAULT_TOL, RBF, Kernel, SVRModel, grid_search, train_svr)
from .transition_system import (TransitionSystem, build_transition_system,
                                map_state, safety_prefix, state_to_jsonable)

VDA = "vda"
SVR = "svr"
SVR_TS = "svr_ts"
DATS = "dats"
VARIANTS = (VDA, SVR, SVR_TS, DATS)

MEAN = "mean"
MEDIAN = "median"

PROB_FLOOR = 1e-12  # path-search probability clamp, keeps edge costs > 0


@dataclass(frozen=True)
class PredictorSpec:
    """Training configuration for any predictor variant."""

    variant: str
    abstraction: StateAbstraction = StateAbstraction()
    statistic: str = MEAN
    kernel: str = RBF
    C: float = 10.0
    gamma: float | None = None  # None: 1 / feature dimension
    epsilon: float | None = None  # None: 1% of target standard deviation
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    scale_numeric: bool = True
    grid: bool = False
    grid_folds: int = 3
    C_grid: tuple = DEFAULT_C_GRID
    gamma_grid: tuple = DEFAULT_GAMMA_GRID
    max_rows: int | None = None  # subsample cap per regressor training set
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown predictor variant {self.variant!r}")
        if self.statistic not in (MEAN, MEDIAN):
            raise ValueError(f"unknown statistic {self.statistic!r}")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "abstraction": self.abstraction.spelling(),
            "statistic": self.statistic,
            "kernel": self.kernel,
            "C": self.C,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "scale_numeric": self.scale_numeric,
            "grid": self.grid,
            "grid_folds": self.grid_folds,
            "C_grid": list(self.C_grid),
            "gamma_grid": list(self.gamma_grid),
            "max_rows": self.max_rows,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PredictorSpec":
        data = dict(data)
        data["abstraction"] = StateAbstraction.parse(data["abstraction"])
        data["C_grid"] = tuple(data.get("C_grid", DEFAULT_C_GRID))
        data["gamma_grid"] = tuple(data.get("gamma_grid", DEFAULT_GAMMA_GRID))
        return cls(**data)


def multiset_mean(values: Multiset) -> float:
    total = values.cardinality()
    return sum(v * c for v, c in values.counts().items()) / total


def multiset_median(values: Multiset) -> float:
    total = values.cardinality()
    ordered = sorted(values.counts().items())
    lo_rank = (total - 1) // 2
    hi_rank = total // 2
    lo = hi = None
    cum = 0
    for value, count in ordered:
        if lo is None and cum + count > lo_rank:
            lo = value
        if hi is None and cum + count > hi_rank:
            hi = value
        cum += count
    return (lo + hi) / 2


@dataclass(frozen=True)
class MeasurementAnnotation:
    """Per-state multisets of historical remaining times."""

    measurements: dict
    statistic: str = MEAN

    def predict(self, state) -> float | None:
        values = self.measurements.get(state)
        if values is None or values.cardinality() == 0:
            return None
        if self.statistic == MEDIAN:
            return multiset_median(values)
        return multiset_mean(values)


@dataclass(frozen=True)
class ConstantEstimator:
    """Stands in for a regressor when a transition has < 2 examples."""

    value: float

    def predict(self, x) -> float:
        return self.value

    def predict_batch(self, X) -> np.ndarray:
        return np.full(len(X), self.value)


@dataclass
class PredictorModel:
    """A trained predictor of any variant, immutable once built."""

    variant: str
    spec: PredictorSpec
    schema: EncodingSchema
    global_mean: float
    ts: TransitionSystem | None = None
    annotation: MeasurementAnnotation | None = None  # vda
    regressor: SVRModel | None = None  # svr, svr_ts
    nb_models: dict = field(default_factory=dict)  # dats: state -> NaiveBayes
    transition_models: dict = field(default_factory=dict)  # dats: transition -> estimator
    training_summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PredictionResult:
    """Remaining-time prediction plus how it was obtained."""

    seconds: float
    state: object = None
    prefix_length: int | None = None
    used_safety: bool = False
    used_global_fallback: bool = False


@dataclass(frozen=True)
class PathPrediction:
    """Most likely future activity sequence of a running case."""

    activities: tuple[str, ...]
    states: tuple  # traversed states, starting at the current one
    probability: float
    reachable: bool = True
    used_safety: bool = False


def _global_mean_remaining(log: EventLog) -> float:
    values = [remaining_time(t, k) for t in log for k in range(1, len(t) + 1)]
    if not values:
        raise ValueError("log has no events")
    return float(np.mean(values))


def _subsample(X, y, max_rows, seed):
    if max_rows is None or len(y) <= max_rows:
        return X, y
    idx = sorted(random.Random(seed).sample(range(len(y)), max_rows))
    return X[idx], y[idx]


def _gamma_for(spec: PredictorSpec, dimension: int) -> float:
    return spec.gamma if spec.gamma is not None else 1.0 / max(dimension, 1)


def _kernel_for(spec: PredictorSpec, dimension: int) -> Kernel:
    if spec.kernel == RBF:
        return Kernel(RBF, _gamma_for(spec, dimension))
    return Kernel(spec.kernel)


def train_vda(log: EventLog, abstraction: StateAbstraction,
              statistic: str = MEAN) -> PredictorModel:
    """Annotate a transition system with historical remaining times."""
    spec = PredictorSpec(VDA, abstraction, statistic)
    ts = build_transition_system(log, abstraction)
    measurements: dict = {}
    for trace in log:
        for k in range(1, len(trace) + 1):
            state, _ = map_state(ts, trace.prefix(k))
            measurements.setdefault(state, Multiset()).add(remaining_time(trace, k))
    schema = fit_schema(log)
    return PredictorModel(
        variant=VDA,
        spec=spec,
        schema=schema,
        global_mean=_global_mean_remaining(log),
        ts=ts,
        annotation=MeasurementAnnotation(measurements, statistic),
        training_summary={"states": ts.state_count(), "transitions": len(ts.transitions)},
    )


def _train_regressor_variant(log: EventLog, spec: PredictorSpec) -> PredictorModel:
    ts = build_transition_system(log, spec.abstraction) if spec.variant == SVR_TS else None
    schema = fit_schema(log, with_state_block=ts, scale_numeric=spec.scale_numeric)
    training = build_training_set(log, schema, ts_context=ts)
    X, y = _subsample(training.X, training.y, spec.max_rows, spec.seed)
    summary: dict = {"training_rows": len(y)}
    if spec.grid:
        C, gamma, model = grid_search(X, y, spec.grid_folds, spec.C_grid, spec.gamma_grid,
                                      epsilon=spec.epsilon, tol=spec.tol,
                                      max_iter=spec.max_iter, seed=spec.seed)
        summary["grid_winner"] = {"C": C, "gamma": gamma}
    else:
        kernel = _kernel_for(spec, schema.dimension)
        model = train_svr(X, y, kernel, spec.C, spec.epsilon,
                          tol=spec.tol, max_iter=spec.max_iter)
    if ts is not None:
        summary.update(states=ts.state_count(), transitions=len(ts.transitions))
    return PredictorModel(
        variant=spec.variant,
        spec=spec,
        schema=schema,
        global_mean=_global_mean_remaining(log),
        ts=ts,
        regressor=model,
        training_summary=summary,
    )


def train_svr_predictor(log: EventLog, spec: PredictorSpec | None = None, **kwargs) -> PredictorModel:
    spec = spec or PredictorSpec(SVR, **kwargs)
    return _train_regressor_variant(log, spec)


def train_svr_ts(log: EventLog, spec: PredictorSpec | None = None, **kwargs) -> PredictorModel:
    spec = spec or PredictorSpec(SVR_TS, **kwargs)
    return _train_regressor_variant(log, spec)


def train_dats(log: EventLog, spec: PredictorSpec | None = None, **kwargs) -> PredictorModel:
    """Build a predictor transition system: NB per branching state, one
    regressor per transition, global mean as last-resort fallback."""
    spec = spec or PredictorSpec(DATS, **kwargs)
    ts = build_transition_system(log, spec.abstraction)
    schema = fit_schema(log, scale_numeric=spec.scale_numeric)
    global_mean = _global_mean_remaining(log)

    samples: dict = {t: ([], []) for t in ts.transitions}
    nb_models: dict = {}
    slot_kinds = schema.slot_kinds()
    for trace in log:
        reprs = [map_state(ts, trace.prefix(k))[0] for k in range(len(trace) + 1)]
        vectors = {}
        for i in range(1, len(trace)):
            src, dst = reprs[i], reprs[i + 1]
            label = event_label(trace.events[i])
            x = vectors.get(i)
            if x is None:
                x = vectors[i] = encode(schema, trace.prefix(i))
            xs, ys = samples[(src, label, dst)]
            xs.append(x)
            ys.append(remaining_time(trace, i))
            if len(ts.successors(src)) >= 2:
                nb = nb_models.get(src)
                if nb is None:
                    nb = nb_models[src] = NaiveBayes(slot_kinds)
                nb.update(x, dst)

    index = {s: i for i, s in enumerate(ts.state_order)}
    index[ts.start_state] = -1
    ordered = sorted(ts.transitions, key=lambda t: (index[t[0]], t[1], index[t[2]]))
    transition_models: dict = {}
    sizes = {}
    for transition in ordered:
        xs, ys = samples[transition]
        sizes[transition] = len(ys)
        if len(ys) >= 2:
            X = np.asarray(xs)
            y = np.asarray(ys, dtype=float)
            X, y = _subsample(X, y, spec.max_rows, spec.seed)
            kernel = _kernel_for(spec, schema.dimension)
            transition_models[transition] = train_svr(
                X, y, kernel, spec.C, spec.epsilon, tol=spec.tol, max_iter=spec.max_iter)
        elif len(ys) == 1:
            transition_models[transition] = ConstantEstimator(float(ys[0]))
        else:
            transition_models[transition] = ConstantEstimator(global_mean)

    return PredictorModel(
        variant=DATS,
        spec=spec,
        schema=schema,
        global_mean=global_mean,
        ts=ts,
        nb_models=nb_models,
        transition_models=transition_models,
        training_summary={
            "states": ts.state_count(),
            "transitions": len(ts.transitions),
            "nb_states": len(nb_models),
            "transition_training_sizes": [
                [state_to_jsonable(src, spec.abstraction), label,
                 state_to_jsonable(dst, spec.abstraction), sizes[(src, label, dst)]]
                for src, label, dst in ordered
            ],
        },
    )


def train_predictor(log: EventLog, spec: PredictorSpec) -> PredictorModel:
    if spec.variant == VDA:
        return train_vda(log, spec.abstraction, spec.statistic)
    if spec.variant == DATS:
        return train_dats(log, spec)
    return _train_regressor_variant(log, spec)


def _dats_estimate(model: PredictorModel, state, x) -> float | None:
    """Weighted average over the possible continuations from ``state``.

    A single continuation carries probability 1; a state without
    successors means the case is complete.  Returns None only when the
    state branches but has no trained classifier (a branching start
    state), in which case the caller falls back to the global mean.
    """
    ts = model.ts
    successors = ts.successors(state)
    if len(successors) == 0:
        return 0.0  # completed: no continuation remains
    if len(successors) == 1:
        dist = {next(iter(successors)): 1.0}
    else:
        nb = model.nb_models.get(state)
        if nb is None:  # branching start state: never trained (training prefixes start at 1)
            return None
        dist = nb.predict(x)
    total = 0.0
    for dst in successors:
        p = dist.get(dst, 0.0)
        if p == 0.0:
            continue
        estimates = [model.transition_models[(state, label, target)].predict(x)
                     for label, target in ts.out_transitions(state) if target == dst]
        total += p * float(np.mean(estimates))
    return total


def predict_remaining_detailed(model: PredictorModel, trace: Trace) -> PredictionResult:
    """Remaining seconds for a running case, with diagnostics."""
    if model.variant == SVR:
        value = model.regressor.predict(encode(model.schema, trace))
        return PredictionResult(max(value, 0.0), prefix_length=len(trace))

    if model.variant == SVR_TS:
        value = model.regressor.predict(encode(model.schema, trace, ts_context=model.ts))
        state, _ = map_state(model.ts, trace)
        return PredictionResult(max(value, 0.0), state=state, prefix_length=len(trace))

    safety = safety_prefix(model.ts, trace)
    used_safety = safety.prefix_length < len(trace)
    work = trace.prefix(safety.prefix_length)

    if model.variant == VDA:
        value = model.annotation.predict(safety.state)
        fallback = value is None
        if fallback:
            value = model.global_mean
        return PredictionResult(max(value, 0.0), safety.state, safety.prefix_length,
                                used_safety, fallback)

    # dats
    x = encode(model.schema, work)
    value = _dats_estimate(model, safety.state, x)
    fallback = value is None
    if fallback:
        value = model.global_mean
    return PredictionResult(max(value, 0.0), safety.state, safety.prefix_length,
                            used_safety, fallback)


def predict_remaining(model: PredictorModel, trace: Trace) -> float:
    """Remaining seconds, clamped at zero."""
    return predict_remaining_detailed(model, trace).seconds


def _edge_probabilities(model: PredictorModel, state, x) -> dict:
    """Probability of each successor state, from the state's classifier;
    a single continuation has probability 1, a missing classifier falls
    back to a uniform choice."""
    successors = model.ts.successors(state)
    if len(successors) == 1:
        return {next(iter(successors)): 1.0}
    nb = model.nb_models.get(state)
    if nb is None:
        return {dst: 1.0 / len(successors) for dst in successors}
    dist = nb.predict(x)
    return {dst: dist.get(dst, 0.0) for dst in successors}


def predict_path(model: PredictorModel, trace: Trace) -> PathPrediction:
    """Most likely activity sequence from the current state to completion.

    Cheapest-path search where an edge to a successor costs the negative
    log of its (clamped) transition probability; the returned probability
    is the product of the clamped edge probabilities.
    """
    if model.variant != DATS:
        raise ValueError(f"path prediction requires a dats model, got {model.variant!r}")
    ts = model.ts
    safety = safety_prefix(ts, trace)
    used_safety = safety.prefix_length < len(trace)
    work = trace.prefix(safety.prefix_length)
    x = encode(model.schema, work)
    origin = safety.state

    max_hops = 10 * ts.state_count()
    probs_cache: dict = {}

    def edge_probs(state):
        if state not in probs_cache:
            probs_cache[state] = {
                dst: min(max(p, PROB_FLOOR), 1.0 - PROB_FLOOR)
                for dst, p in _edge_probabilities(model, state, x).items()
            }
        return probs_cache[state]

    best = {origin: 0.0}
    parent: dict = {}
    visited = set()
    counter = 0
    heap = [(0.0, 0, origin)]
    goal = None
    while heap:
        cost, _, state = heapq.heappop(heap)
        if state in visited:
            continue
        visited.add(state)
        if state in ts.accepting_states:
            goal = state
            break
        for label, dst in ts.out_transitions(state):
            if dst in visited:
                continue
            step = -math.log(edge_probs(state)[dst])
            nd = cost + step
            if nd < best.get(dst, math.inf):
                best[dst] = nd
                parent[dst] = (state, label)
                counter += 1
                heapq.heappush(heap, (nd, counter, dst))

    if goal is None:
        return PathPrediction((), (origin,), 0.0, reachable=False, used_safety=used_safety)

    labels: list[str] = []
    states = [goal]
    node = goal
    while node != origin:
        prev, label = parent[node]
        labels.append(label)
        states.append(prev)
        node = prev
    labels.reverse()
    states.reverse()
    if len(labels) > max_hops:
        raise AssertionError("path search exceeded the walk cap")
    probability = 1.0
    for prev, dst in zip(states, states[1:]):
        probability *= edge_probs(prev)[dst]
    return PathPrediction(tuple(labels), tuple(states), probability,
                          reachable=True, used_safety=used_safety)
