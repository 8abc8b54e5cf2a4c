"""Cross-validated evaluation of predictors on an event log.

Time accuracy is measured as mean absolute / root mean square percentage
error over every proper prefix of every test trace; samples whose actual
remaining time is zero are excluded (relative error is undefined there)
and counted.  Path accuracy compares predicted and actual future
activity sequences per horizon 1..5 with the sequence similarity (DAM)
and the common-prefix ratio (PRE), against a seeded random-walk
baseline driven by empirical transition frequencies.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .abstraction import sequence_similarity
from .eventlog import EventLog, Trace, remaining_time, variants
from .predictors import (DATS, PathPrediction, PredictorModel, PredictorSpec,
                         predict_path, predict_remaining_detailed,
                         train_predictor)
from .transition_system import (TransitionSystem, build_transition_system,
                                map_state, safety_prefix)

PATH_HORIZONS = (1, 2, 3, 4, 5)


def percentage_errors(actual, predicted) -> tuple[np.ndarray, int]:
    """Per-sample |A-F|/|A| ratios with zero-actual samples excluded.

    Returns the kept ratios and the exclusion count, so MAPE and RMSPE
    share one denominator.
    """
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.shape != predicted.shape:
        raise ValueError("actual and predicted must have equal length")
    keep = actual != 0
    excluded = int((~keep).sum())
    ratios = np.abs((actual[keep] - predicted[keep]) / actual[keep])
    return ratios, excluded


def mape(actual, predicted) -> float:
    """Mean absolute percentage error, in percent."""
    ratios, _ = percentage_errors(actual, predicted)
    if len(ratios) == 0:
        raise ValueError("no samples with non-zero actual value")
    return float(ratios.mean()) * 100.0


def rmspe(actual, predicted) -> float:
    """Root mean square percentage error, in percent."""
    ratios, _ = percentage_errors(actual, predicted)
    if len(ratios) == 0:
        raise ValueError("no samples with non-zero actual value")
    return float(np.sqrt((ratios ** 2).mean())) * 100.0


def common_prefix_length(a, b) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def path_metrics(predicted, actual, horizon: int) -> tuple[float, float]:
    """(DAM, PRE) of the two activity sequences truncated to ``horizon``.

    DAM is the normalized edit similarity of the truncations; PRE is the
    longest common prefix of the truncations divided by the horizon.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    p = tuple(predicted)[:horizon]
    a = tuple(actual)[:horizon]
    dam = sequence_similarity(p, a)
    pre = common_prefix_length(p, a) / horizon
    return dam, pre


@dataclass(frozen=True)
class RemovalReport:
    removed_variants: tuple
    removed_case_ids: tuple
    description: str


def remove_variants(log: EventLog, fraction: float | None = None,
                    activity: str | None = None, seed: int = 0) -> tuple[EventLog, RemovalReport]:
    """Drop whole variants (or every trace containing an activity) from a
    training log, reporting what went away."""
    if (fraction is None) == (activity is None):
        raise ValueError("specify exactly one of fraction or activity")
    groups = variants(log)
    if activity is not None:
        removed = [seq for seq in groups if activity in seq]
        description = f"traces containing activity {activity!r}"
    else:
        if not 0.0 <= fraction <= 1.0:
            raise ValueError("fraction must be in [0, 1]")
        ordered = sorted(groups)
        random.Random(seed).shuffle(ordered)
        count = int(len(ordered) * fraction)
        removed = ordered[:count]
        description = f"{count} of {len(ordered)} variants (fraction {fraction})"
    removed_set = set(removed)
    removed_cases = [cid for seq in sorted(removed_set) for cid in groups[seq]]
    kept = [t for t in log if t.activities() not in removed_set]
    if not kept:
        raise ValueError("variant removal would empty the training log")
    return log.replace_traces(kept), RemovalReport(tuple(sorted(removed_set)),
                                                   tuple(removed_cases), description)


@dataclass(frozen=True)
class FrequencyModel:
    """Empirical visit/transition/termination counts over a log's states."""

    ts: TransitionSystem
    transition_counts: dict
    visit_counts: dict
    terminal_counts: dict


def fit_frequencies(log: EventLog, ts: TransitionSystem) -> FrequencyModel:
    transition_counts: dict = {}
    visit_counts: dict = {}
    terminal_counts: dict = {}
    for trace in log:
        reprs = [map_state(ts, trace.prefix(k))[0] for k in range(len(trace) + 1)]
        for state in reprs:
            visit_counts[state] = visit_counts.get(state, 0) + 1
        for k in range(len(trace)):
            t = (reprs[k], trace.events[k].activity, reprs[k + 1])
            transition_counts[t] = transition_counts.get(t, 0) + 1
        terminal_counts[reprs[-1]] = terminal_counts.get(reprs[-1], 0) + 1
    return FrequencyModel(ts, transition_counts, visit_counts, terminal_counts)


def random_path_baseline(freq: FrequencyModel, trace: Trace,
                         rng: random.Random) -> PathPrediction:
    """Sample one future path: next activities drawn with their empirical
    frequencies, stopping at accepting states with the empirical stop
    probability."""
    ts = freq.ts
    safety = safety_prefix(ts, trace)
    state = safety.state
    used_safety = safety.prefix_length < len(trace)
    labels: list[str] = []
    states = [state]
    probability = 1.0
    cap = 10 * ts.state_count()
    for _ in range(cap):
        visits = freq.visit_counts.get(state, 0)
        outgoing = [(label, dst, freq.transition_counts.get((state, label, dst), 0))
                    for label, dst in ts.out_transitions(state)]
        total_out = sum(c for _, _, c in outgoing)
        if state in ts.accepting_states:
            ends = freq.terminal_counts.get(state, 0)
            denom = visits if visits > 0 else ends + total_out
            stop_p = 1.0 if total_out == 0 else (ends / denom if denom else 1.0)
            if rng.random() < stop_p:
                probability *= stop_p if stop_p > 0 else 1.0
                break
            probability *= 1.0 - stop_p
        if total_out == 0:
            break
        pick = rng.random() * total_out
        acc = 0.0
        for label, dst, count in outgoing:
            acc += count
            if pick < acc:
                probability *= count / total_out
                labels.append(label)
                states.append(dst)
                state = dst
                break
    return PathPrediction(tuple(labels), tuple(states), max(probability, 1e-300),
                          reachable=True, used_safety=used_safety)


@dataclass
class FoldTimeResult:
    mape: float
    rmspe: float
    n_samples: int
    n_excluded: int
    safety_events: int
    global_fallbacks: int


@dataclass
class PathTable:
    """Per-horizon DAM/PRE means with across-fold deviations."""

    rows: dict = field(default_factory=dict)  # horizon -> (dam_mean, dam_std, pre_mean, pre_std, n)

    def as_records(self) -> list[dict]:
        out = []
        for horizon, (dam, dam_sd, pre, pre_sd, n) in self.rows.items():
            out.append({"horizon": horizon, "dam": dam, "dam_std": dam_sd,
                        "pre": pre, "pre_std": pre_sd, "samples": n})
        return out


@dataclass
class EvaluationReport:
    descriptor: dict
    folds: list[FoldTimeResult] = field(default_factory=list)
    mape_mean: float = math.nan
    mape_std: float = math.nan
    rmspe_mean: float = math.nan
    rmspe_std: float = math.nan
    path_fpp: PathTable | None = None
    path_random: PathTable | None = None

    @property
    def safety_events(self) -> int:
        return sum(f.safety_events for f in self.folds)

    @property
    def global_fallbacks(self) -> int:
        return sum(f.global_fallbacks for f in self.folds)

    def to_records(self) -> dict:
        doc = {
            "descriptor": self.descriptor,
            "mape_mean": self.mape_mean,
            "mape_std": self.mape_std,
            "rmspe_mean": self.rmspe_mean,
            "rmspe_std": self.rmspe_std,
            "folds": [vars(f) for f in self.folds],
        }
        if self.path_fpp is not None:
            doc["path_fpp"] = self.path_fpp.as_records()
        if self.path_random is not None:
            doc["path_random"] = self.path_random.as_records()
        return doc


def _sample_std(values) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return 0.0
    return float(values.std(ddof=1))


def fold_case_ids(log: EventLog, k: int, seed: int) -> list[list[str]]:
    """Trace-level fold assignment: seeded shuffle, sizes differ by <= 1."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    ids = [t.case_id for t in log]
    if len(ids) < k:
        raise ValueError(f"log has {len(ids)} traces, fewer than {k} folds")
    random.Random(seed).shuffle(ids)
    return [list(part) for part in np.array_split(np.asarray(ids, dtype=object), k)]


def _evaluate_time_fold(model: PredictorModel, test: list[Trace]) -> FoldTimeResult:
    actuals: list[float] = []
    preds: list[float] = []
    safety_events = 0
    fallbacks = 0
    for trace in test:
        for i in range(1, len(trace)):
            result = predict_remaining_detailed(model, trace.prefix(i))
            actuals.append(remaining_time(trace, i))
            preds.append(result.seconds)
            safety_events += int(result.used_safety)
            fallbacks += int(result.used_global_fallback)
    ratios, excluded = percentage_errors(actuals, preds)
    if len(ratios) == 0:
        raise ValueError("fold has no prefixes with non-zero remaining time")
    fold_mape = float(ratios.mean()) * 100.0
    fold_rmspe = float(np.sqrt((ratios ** 2).mean())) * 100.0
    return FoldTimeResult(fold_mape, fold_rmspe, len(ratios), excluded,
                          safety_events, fallbacks)


def _collect_path_samples(predict_one, test: list[Trace], horizons) -> dict:
    """per-horizon lists of (dam, pre) plus the pooled samples under None."""
    buckets: dict = {h: [] for h in horizons}
    buckets[None] = []
    for trace in test:
        acts = trace.activities()
        for i in range(1, len(trace)):
            actual_future = acts[i:]
            predicted = predict_one(trace.prefix(i))
            for h in horizons:
                if len(actual_future) < h:
                    continue
                sample = path_metrics(predicted, actual_future, h)
                buckets[h].append(sample)
                buckets[None].append(sample)
    return buckets


def _path_table(per_fold_buckets: list[dict], horizons) -> PathTable:
    table = PathTable()
    for key in (*horizons, None):
        dams = [float(np.mean([s[0] for s in fold[key]])) for fold in per_fold_buckets if fold[key]]
        pres = [float(np.mean([s[1] for s in fold[key]])) for fold in per_fold_buckets if fold[key]]
        n = sum(len(fold[key]) for fold in per_fold_buckets)
        if not dams:
            continue
        label = "avg" if key is None else key
        table.rows[label] = (float(np.mean(dams)), _sample_std(dams),
                             float(np.mean(pres)), _sample_std(pres), n)
    return table


def cross_validate(log: EventLog, spec: PredictorSpec, k: int = 5, seed: int = 0,
                   evaluate_paths: bool = False, baseline_draws: int = 10,
                   train_filter=None) -> EvaluationReport:
    """k-fold cross validation of one predictor variant.

    Folds split whole traces, never events.  ``train_filter`` (log ->
    log) is applied to each training portion, e.g. for variant-removal
    experiments.  Path evaluation requires the dats variant and adds the
    seeded random-walk baseline with ``baseline_draws`` draws per prefix.
    """
    folds = fold_case_ids(log, k, seed)
    by_id = {t.case_id: t for t in log}
    report = EvaluationReport(descriptor={
        "predictor": spec.to_dict(), "folds": k, "seed": seed,
        "traces": len(log), "paths": evaluate_paths,
    })
    fpp_buckets = []
    rnd_buckets = []
    for held in range(k):
        test_ids = set(folds[held])
        train_log = log.replace_traces([t for t in log if t.case_id not in test_ids])
        if train_filter is not None:
            train_log = train_filter(train_log)
        test = [by_id[cid] for cid in folds[held]]
        assert not any(t.case_id in test_ids for t in train_log)
        model = train_predictor(train_log, spec)
        report.folds.append(_evaluate_time_fold(model, test))
        if evaluate_paths:
            if spec.variant != DATS:
                raise ValueError("path evaluation requires the dats variant")
            fpp_buckets.append(_collect_path_samples(
                lambda prefix: predict_path(model, prefix).activities, test, PATH_HORIZONS))
            freq = fit_frequencies(train_log, model.ts)
            rng = random.Random(seed * 7919 + held)

            def sample_paths(prefix):
                return [random_path_baseline(freq, prefix, rng).activities
                        for _ in range(baseline_draws)]

            rnd_buckets.append(_collect_random_samples(sample_paths, test, PATH_HORIZONS))
    report.mape_mean = float(np.mean([f.mape for f in report.folds]))
    report.mape_std = _sample_std([f.mape for f in report.folds])
    report.rmspe_mean = float(np.mean([f.rmspe for f in report.folds]))
    report.rmspe_std = _sample_std([f.rmspe for f in report.folds])
    if evaluate_paths:
        report.path_fpp = _path_table(fpp_buckets, PATH_HORIZONS)
        report.path_random = _path_table(rnd_buckets, PATH_HORIZONS)
    return report


def _collect_random_samples(sample_paths, test: list[Trace], horizons) -> dict:
    """Like _collect_path_samples but averaging metrics over several draws."""
    buckets: dict = {h: [] for h in horizons}
    buckets[None] = []
    for trace in test:
        acts = trace.activities()
        for i in range(1, len(trace)):
            actual_future = acts[i:]
            draws = sample_paths(trace.prefix(i))
            for h in horizons:
                if len(actual_future) < h:
                    continue
                pairs = [path_metrics(p, actual_future, h) for p in draws]
                dam = float(np.mean([d for d, _ in pairs]))
                pre = float(np.mean([p for _, p in pairs]))
                buckets[h].append((dam, pre))
                buckets[None].append((dam, pre))
    return buckets


def format_time_table(reports: dict[str, EvaluationReport], baseline: str | None = "vda") -> str:
    """Text table in the familiar predictor-by-metric layout."""
    lines = [f"{'':>10} {'MAPE':>20} {'RMSPE':>20}"]
    for name, report in reports.items():
        star = "*" if name == baseline else ""
        lines.append(
            f"{(name.upper() + star):>10} "
            f"{report.mape_mean:>13.2f}±{report.mape_std:<5.2f}% "
            f"{report.rmspe_mean:>13.2f}±{report.rmspe_std:<5.2f}%"
        )
    return "\n".join(lines)


def format_path_table(fpp: PathTable, rnd: PathTable) -> str:
    lines = [f"{'#':>4} {'FPP DAM':>16} {'FPP PRE':>16} {'RND DAM':>16} {'RND PRE':>16}"]
    for key in (*PATH_HORIZONS, "avg"):
        if key not in fpp.rows:
            continue
        fd, fds, fp, fps, _ = fpp.rows[key]
        rd, rds, rp, rps, _ = rnd.rows.get(key, (math.nan,) * 5)
        label = "E#" if key == "avg" else str(key)
        lines.append(f"{label:>4} {fd:>9.4f}±{fds:<6.4f} {fp:>9.4f}±{fps:<6.4f} "
                     f"{rd:>9.4f}±{rds:<6.4f} {rp:>9.4f}±{rps:<6.4f}")
    return "\n".join(lines)


def path_plot_series(fpp: PathTable, rnd: PathTable, sep: str = "\t") -> str:
    """Delimiter-separated horizon series for external plotting."""
    lines = [sep.join(["horizon", "fpp_dam", "fpp_pre", "random_dam", "random_pre"])]
    for h in PATH_HORIZONS:
        if h not in fpp.rows:
            continue
        fd, _, fp, _, _ = fpp.rows[h]
        rd, _, rp, _, _ = rnd.rows.get(h, (math.nan,) * 5)
        lines.append(sep.join([str(h), repr(fd), repr(fp), repr(rd), repr(rp)]))
    return "\n".join(lines) + "\n"
