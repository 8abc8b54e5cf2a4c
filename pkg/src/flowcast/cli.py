"""Command-line entry point: train, predict, evaluate, serve, gen-log.

Exit status is 0 on success, 1 for user errors (bad input, unreadable
files, invalid configuration) and 2 for internal failures.  A JSON
config file may supply any long flag (keys use underscores); explicit
command-line flags win on conflict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import evaluation
from .abstraction import StateAbstraction
from .archive import ArchiveError, load_model, save_model
from .eventlog import (Event, LogParseError, Trace, format_timestamp,
                       parse_log, parse_timestamp, serialize_log)
from .generator import GeneratorSpec, generate_log
from .predictors import (DATS, VARIANTS, PredictorSpec, predict_path,
                         predict_remaining_detailed, train_predictor)
from .service import serve


class CLIError(Exception):
    """User-facing error: message without a traceback, exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(message)


def _add_svr_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=["rbf", "linear"], default="rbf")
    p.add_argument("--C", dest="C", type=float, default=10.0)
    p.add_argument("--gamma", type=float, default=None,
                   help="RBF bandwidth (default: 1/feature dimension)")
    p.add_argument("--epsilon", type=float, default=None,
                   help="tube width (default: 1%% of target std)")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--grid", action="store_true", help="grid-search C and gamma")
    p.add_argument("--grid-folds", type=int, default=3)
    p.add_argument("--max-rows", type=int, default=None,
                   help="seeded subsample cap per regressor training set")


def build_parser() -> _Parser:
    parser = _Parser(prog="flowcast", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="JSON file of default flag values")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.sub_map = {}

    p = parser.sub_map["train"] = sub.add_parser(
        "train", help="train a predictor and write a model archive")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=list(VARIANTS), default=DATS)
    p.add_argument("--abstraction", default="set", help="set | multiset | seq, optional :h horizon")
    p.add_argument("--statistic", choices=["mean", "median"], default="mean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-history", action="store_true",
                   help="do not embed training traces (disables similar-trace lookup)")
    _add_svr_options(p)

    p = parser.sub_map["predict"] = sub.add_parser(
        "predict", help="predict remaining time for running cases")
    p.add_argument("--model", required=True)
    p.add_argument("--trace", required=True, help="CSV log of running (partial) cases")
    p.add_argument("--deadline", default=None, help="absolute deadline timestamp")

    p = parser.sub_map["evaluate"] = sub.add_parser(
        "evaluate", help="cross-validated accuracy report")
    p.add_argument("--log", required=True)
    p.add_argument("--variants", default="vda,dats,svr,svr_ts",
                   help="comma-separated predictor variants")
    p.add_argument("--abstraction", default="set")
    p.add_argument("--statistic", choices=["mean", "median"], default="mean")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", action="store_true", help="evaluate future-path prediction (dats)")
    p.add_argument("--baseline-draws", type=int, default=10)
    p.add_argument("--remove-fraction", type=float, default=None,
                   help="drop this fraction of variants from each training fold")
    p.add_argument("--remove-activity", default=None,
                   help="drop training traces containing this activity")
    p.add_argument("--out", default=None, help="directory for report files")
    _add_svr_options(p)

    p = parser.sub_map["serve"] = sub.add_parser(
        "serve", help="run the JSON prediction service")
    p.add_argument("--model", required=True, action="append",
                   help="model archive (repeatable)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)

    p = parser.sub_map["gen-log"] = sub.add_parser(
        "gen-log", help="generate a synthetic event log")
    p.add_argument("--spec", required=True, help="JSON generator spec")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")

    return parser


def _apply_config(parser: _Parser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                defaults = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CLIError(f"cannot read config {args.config}: {exc}")
        if not isinstance(defaults, dict):
            raise CLIError("config file must hold a JSON object")
        parser.set_defaults(**defaults)
        parser.sub_map[args.command].set_defaults(**defaults)
        args = parser.parse_args(argv)  # explicit flags still win
    return args


def _read_log(path: str):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return parse_log(fh)
    except OSError as exc:
        raise CLIError(f"cannot read log {path}: {exc}")


def _spec_from_args(args, variant: str) -> PredictorSpec:
    return PredictorSpec(
        variant=variant,
        abstraction=StateAbstraction.parse(args.abstraction),
        statistic=args.statistic,
        kernel=args.kernel,
        C=args.C,
        gamma=args.gamma,
        epsilon=args.epsilon,
        tol=args.tol,
        grid=args.grid,
        grid_folds=args.grid_folds,
        max_rows=args.max_rows,
        seed=args.seed,
    )


def _human_duration(seconds: float) -> str:
    seconds = int(round(seconds))
    days, rest = divmod(seconds, 86400)
    hours, rest = divmod(rest, 3600)
    minutes, secs = divmod(rest, 60)
    parts = []
    if days:
        parts.append(f"{days}d")
    if hours:
        parts.append(f"{hours}h")
    if minutes:
        parts.append(f"{minutes}m")
    if secs or not parts:
        parts.append(f"{secs}s")
    return " ".join(parts)


def cmd_train(args) -> int:
    log = _read_log(args.log)
    if len(log) == 0:
        raise CLIError("training log has no traces")
    spec = _spec_from_args(args, args.variant)
    model = train_predictor(log, spec)
    save_model(model, args.out, history=None if args.no_history else log)
    summary = model.training_summary
    print(f"trained {model.variant} on {len(log)} traces -> {args.out}")
    if "states" in summary:
        print(f"  states: {summary['states']}  transitions: {summary['transitions']}")
    if "grid_winner" in summary:
        win = summary["grid_winner"]
        print(f"  grid winner: C={win['C']} gamma={win['gamma']}")
    sizes = summary.get("transition_training_sizes")
    if sizes:
        print("  transition training sizes:")
        for src, label, dst, count in sizes:
            print(f"    {src} -{label}-> {dst}: {count}")
    return 0


def cmd_predict(args) -> int:
    model, _history = load_model(args.model)
    log = _read_log(args.trace)
    if len(log) == 0:
        raise CLIError("trace file has no cases")
    deadline = None
    if args.deadline:
        try:
            deadline = parse_timestamp(args.deadline)
        except ValueError as exc:
            raise CLIError(str(exc))
    name_to_slot = {enc.name: i for i, enc in enumerate(model.schema.attributes)}
    for trace in log:
        remapped = _remap_trace(trace, log, name_to_slot, len(model.schema.attributes))
        result = predict_remaining_detailed(model, remapped)
        remaining = int(round(result.seconds))
        completion = remapped.events[-1].timestamp + remaining if len(remapped) else remaining
        doc = {
            "case_id": trace.case_id,
            "remaining_seconds": remaining,
            "predicted_completion": format_timestamp(completion),
            "used_safety_prefix": result.used_safety,
            "used_global_fallback": result.used_global_fallback,
        }
        line = (f"case {trace.case_id}: remaining {_human_duration(remaining)} "
                f"({remaining} s); completion {doc['predicted_completion']}")
        if model.variant == DATS:
            path = predict_path(model, remapped)
            if path.reachable:
                doc["path"] = {"activities": list(path.activities),
                               "probability": path.probability}
                shown = " -> ".join(path.activities) if path.activities else "(complete)"
                line += f"; path {shown} (p={path.probability:.2f})"
        if deadline is not None:
            doc["alarm"] = completion > deadline
            line += f"; alarm: {'YES' if doc['alarm'] else 'no'}"
        if result.used_safety:
            line += " [safety prefix applied]"
        if result.used_global_fallback:
            line += " [global average fallback]"
        print(line)
        print(json.dumps(doc, sort_keys=True))
    return 0


def _remap_trace(trace, log, name_to_slot: dict, width: int):
    """Reorder a trace's attribute slots to match the model schema by name."""
    events = []
    for e in trace.events:
        attrs: list = [None] * width
        for i, fld in enumerate(log.schema):
            slot = name_to_slot.get(fld.name)
            if slot is not None:
                attrs[slot] = e.attributes[i]
        events.append(Event(e.activity, e.case_id, e.timestamp, tuple(attrs)))
    return Trace(trace.case_id, tuple(events))


def cmd_evaluate(args) -> int:
    log = _read_log(args.log)
    names = [v.strip() for v in args.variants.split(",") if v.strip()]
    for name in names:
        if name not in VARIANTS:
            raise CLIError(f"unknown variant {name!r}")
    if args.remove_fraction is not None and args.remove_activity is not None:
        raise CLIError("use only one of --remove-fraction / --remove-activity")

    train_filter = None
    if args.remove_fraction is not None or args.remove_activity is not None:
        def train_filter(train_log):
            filtered, report = evaluation.remove_variants(
                train_log, fraction=args.remove_fraction,
                activity=args.remove_activity, seed=args.seed)
            print(f"  removed from training: {report.description}")
            return filtered

    reports: dict[str, evaluation.EvaluationReport] = {}
    for name in names:
        spec = _spec_from_args(args, name)
        print(f"evaluating {name} ({args.folds}-fold, seed {args.seed})...")
        reports[name] = evaluation.cross_validate(
            log, spec, k=args.folds, seed=args.seed,
            evaluate_paths=args.paths and name == DATS,
            baseline_draws=args.baseline_draws,
            train_filter=train_filter,
        )
    baseline = "vda" if "vda" in reports else None
    table = evaluation.format_time_table(reports, baseline)
    print(table)
    path_table = None
    series = None
    dats_report = reports.get(DATS)
    if args.paths and dats_report and dats_report.path_fpp is not None:
        path_table = evaluation.format_path_table(dats_report.path_fpp, dats_report.path_random)
        series = evaluation.path_plot_series(dats_report.path_fpp, dats_report.path_random)
        print(path_table)

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        records = {name: r.to_records() for name, r in reports.items()}
        with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(records, fh, indent=2, sort_keys=True)
        with open(os.path.join(args.out, "time_table.txt"), "w", encoding="utf-8") as fh:
            fh.write(table + "\n")
        if path_table:
            with open(os.path.join(args.out, "path_table.txt"), "w", encoding="utf-8") as fh:
                fh.write(path_table + "\n")
            with open(os.path.join(args.out, "path_series.tsv"), "w", encoding="utf-8") as fh:
                fh.write(series)
        print(f"report files written to {args.out}")
    return 0


def cmd_serve(args) -> int:
    for path in args.model:
        if not os.path.exists(path):
            raise CLIError(f"model archive not found: {path}")
    print(f"serving {len(args.model)} model(s) on http://{args.host}:{args.port}")
    serve(args.model, host=args.host, port=args.port)
    return 0


def cmd_gen_log(args) -> int:
    try:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = GeneratorSpec.from_json(fh.read())
    except OSError as exc:
        raise CLIError(f"cannot read spec {args.spec}: {exc}")
    except (ValueError, KeyError, TypeError) as exc:
        raise CLIError(f"invalid generator spec: {exc}")
    log = generate_log(spec)
    text = serialize_log(log)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        total_events = sum(len(t) for t in log)
        print(f"wrote {len(log)} cases / {total_events} events to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
    "gen-log": cmd_gen_log,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, list(argv) if argv is not None else sys.argv[1:])
        return _COMMANDS[args.command](args)
    except (CLIError, LogParseError, ArchiveError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
