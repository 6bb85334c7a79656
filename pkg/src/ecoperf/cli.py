"""Command-line front end for every pipeline stage.

Exit codes: 0 success, 1 domain error, 2 usage error. Machine output goes
to stdout or ``--out``; ``--out`` files receive exact payload bytes (the
same bytes the HTTP service returns for read queries).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import bench, botdetect, linkpred, tseries
from .bench import (
    BenchmarkRegistry,
    BenchmarkSpec,
    Leaderboard,
    build_leaderboard,
    dataset_checksum,
    export_leaderboard,
)
from .config import GlobalConfig
from .errors import EcoperfError
from .events import EventStore
from .graph import (
    build_bipartite,
    build_repo_topic,
    load_repo_topics,
    merge_relation_topic,
    project_repo_relation,
    read_edge_list,
    write_edge_list,
)
from .indices import EventWeightConfig, default_weights
from .queries import (
    INDEX_IDS,
    catalog_payload,
    index_payload,
    index_results,
    leaderboard_payload,
    runs_payload,
)
from .util import is_month, json_bytes


def _month_arg(value: str) -> str:
    if not is_month(value):
        raise argparse.ArgumentTypeError(f"{value!r} is not a YYYY-MM month")
    return value


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return n


def _emit(data: bytes, out: str | None) -> None:
    """Exact bytes to --out files; stdout gets a trailing newline if absent."""
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data if data.endswith(b"\n") else data + b"\n")
        sys.stdout.buffer.flush()


def _load_weights(args, config: GlobalConfig) -> EventWeightConfig:
    path = getattr(args, "weights", None) or config.weights
    return EventWeightConfig.from_file(path) if path else default_weights()


def _store(args, config: GlobalConfig) -> EventStore:
    return EventStore(getattr(args, "store", None) or config.store)


def _registry(args, config: GlobalConfig) -> BenchmarkRegistry:
    return BenchmarkRegistry(getattr(args, "registry", None) or config.registry)


def _seed(args, config: GlobalConfig) -> int:
    seed = getattr(args, "seed", None)
    return config.seed if seed is None else seed


# -- handlers -------------------------------------------------------------------


def cmd_ingest(args, config: GlobalConfig) -> int:
    store = _store(args, config)
    if args.input == "-":
        report = store.ingest_stream(sys.stdin)
    else:
        with open(args.input, encoding="utf-8") as f:
            report = store.ingest_stream(f)
    _emit(json_bytes(report.to_dict()), args.out)
    return 0


def cmd_graph_build(args, config: GlobalConfig) -> int:
    store = _store(args, config)
    weights = _load_weights(args, config)
    events = store.query_events(first=args.month_from, last=args.month_to)
    g = build_bipartite(events, weights.weights)
    write_edge_list(g, args.out)
    return 0


def cmd_graph_project(args, config: GlobalConfig) -> int:
    g = read_edge_list(args.graph)
    write_edge_list(project_repo_relation(g, mode=args.mode), args.out)
    return 0


def cmd_graph_topics(args, config: GlobalConfig) -> int:
    topics = load_repo_topics(args.input)
    write_edge_list(build_repo_topic(topics), args.out)
    return 0


def cmd_graph_merge(args, config: GlobalConfig) -> int:
    rel = read_edge_list(args.relation)
    top = read_edge_list(args.topics)
    write_edge_list(merge_relation_topic(rel, top, alpha=args.alpha), args.out)
    return 0


def _index_csv(results) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["entity", "month", "index", "value"])
    for r in results:
        writer.writerow([r.entity, r.month, r.index_name, repr(r.value)])
    return buf.getvalue().encode("utf-8")


def cmd_index(args, config: GlobalConfig) -> int:
    weights = _load_weights(args, config)
    store = _store(args, config)
    results = index_results(
        store,
        args.index,
        args.month,
        weights,
        entity_kind=args.entity,
        damping=args.damping,
        tol=args.tol,
        max_iter=args.max_iter,
        workers=args.workers,
        scale=args.scale,
    )
    if args.top is not None:
        results = results[: args.top]
    if args.format == "csv":
        _emit(_index_csv(results), args.out)
    else:
        _emit(json_bytes(index_payload(results)), args.out)
    return 0


def cmd_linkpred_split(args, config: GlobalConfig) -> int:
    g = read_edge_list(args.graph)
    seed = _seed(args, config)
    split = linkpred.split_edges(g, args.test_fraction, seed)
    write_edge_list(split.train, args.out_train)
    lines = [f"#kind={g.kind}"] + [f"{u}\t{v}\t{w!r}" for u, v, w in split.test_edges]
    Path(args.out_test).write_text("\n".join(lines) + "\n", "utf-8")
    _emit(
        json_bytes(
            {
                "seed": seed,
                "test_fraction": args.test_fraction,
                "train_edges": split.train.n_edges,
                "test_edges": len(split.test_edges),
            }
        ),
        None,
    )
    return 0


def cmd_linkpred_eval(args, config: GlobalConfig) -> int:
    g = read_edge_list(args.graph)
    seed = _seed(args, config)
    split = linkpred.split_edges(g, args.test_fraction, seed)
    report = linkpred.evaluate_auc(
        split,
        algo=args.algo,
        n_comparisons=args.n,
        seed=seed,
        dataset=args.dataset or Path(args.graph).stem,
        workers=args.workers,
        measure_time=not args.no_timing,
    )
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", "dataset", "auc", "time_s"])
        writer.writerow([report.algo, report.dataset, repr(report.auc), repr(report.wall_time_seconds)])
        _emit(buf.getvalue().encode("utf-8"), args.out)
    else:
        _emit(json_bytes(report.to_dict()), args.out)
    return 0


def cmd_ts_build(args, config: GlobalConfig) -> int:
    store = _store(args, config)
    weights = _load_weights(args, config)
    repos = [r for r in args.repos.split(",") if r]
    matrix = tseries.build_metric_matrix(
        store, repos, args.month_from, args.month_to, metric=args.metric, weights=weights
    )
    matrix.to_csv(args.out)
    return 0


def cmd_ts_mask(args, config: GlobalConfig) -> int:
    matrix = tseries.MetricMatrix.from_csv(args.matrix)
    seed = _seed(args, config)
    masked, heldout = tseries.apply_mask(matrix, args.fraction, seed, mode=args.mode)
    masked.to_csv(args.out_masked)
    payload = {
        "seed": seed,
        "mode": args.mode,
        "fraction": args.fraction,
        "cells": [
            {"row": i, "col": j, "repo": matrix.repos[i], "month": matrix.months[j], "value": v}
            for i, j, v in heldout
        ],
    }
    Path(args.out_heldout).write_bytes(json_bytes(payload))
    return 0


def cmd_ts_impute(args, config: GlobalConfig) -> int:
    matrix = tseries.MetricMatrix.from_csv(args.matrix)
    params = {}
    if args.method == "seasonal_naive":
        params["period"] = args.period
    if args.method == "knn_rows":
        params["k"] = args.k
    filled = tseries.impute(matrix, args.method, **params)
    filled.to_csv(args.out)
    return 0


def cmd_ts_eval(args, config: GlobalConfig) -> int:
    heldout_doc = json.loads(Path(args.heldout).read_text("utf-8"))
    heldout = [(c["row"], c["col"], float(c["value"])) for c in heldout_doc["cells"]]
    predicted = tseries.MetricMatrix.from_csv(args.predicted)
    score = tseries.evaluate_completion(heldout, predicted)
    _emit(json_bytes(score.to_dict()), args.out)
    return 0


def cmd_ts_anomaly(args, config: GlobalConfig) -> int:
    series: dict[str, list[tuple[str, float]]] = {}
    for repo, month, value in tseries.read_series_csv(args.input):
        series.setdefault(repo, []).append((month, value))
    lines = []
    for repo in sorted(series):
        for hit in tseries.detect_anomalies(series[repo], args.window, args.threshold):
            lines.append(
                json_bytes(
                    {"repo": repo, "month": hit.month, "value": hit.value, "score": hit.score}
                )
            )
    _emit(b"\n".join(lines) + b"\n" if lines else b"", args.out)
    return 0


def cmd_bot_features(args, config: GlobalConfig) -> int:
    store = _store(args, config)
    labels = botdetect.read_labels_csv(args.labels) if args.labels else None
    if args.logins:
        logins = [x for x in args.logins.split(",") if x]
    elif args.logins_file:
        logins = [ln.strip() for ln in Path(args.logins_file).read_text("utf-8").splitlines() if ln.strip()]
    elif args.discover:
        logins = botdetect.select_logins(
            store, first=args.month_from, last=args.month_to, active_only=args.active_only
        )
    elif labels:
        logins = sorted(labels)
    else:
        raise EcoperfError("give --logins, --logins-file, --labels, or --discover")
    rows = botdetect.extract_features_many(
        store, logins, first=args.month_from, last=args.month_to,
        labels=labels, min_events=args.min_events,
    )
    botdetect.write_features_csv(rows, args.out)
    return 0


def cmd_bot_train(args, config: GlobalConfig) -> int:
    rows = botdetect.read_features_csv(args.features)
    model = botdetect.train_classifier(
        rows, epochs=args.epochs, lr=args.lr, seed=_seed(args, config)
    )
    model.to_file(args.out)
    _emit(json_bytes({"final_loss": model.meta["final_loss"], "seed": model.meta["seed"]}), None)
    return 0


def cmd_bot_eval(args, config: GlobalConfig) -> int:
    model = botdetect.ClassifierModel.from_file(args.model)
    rows = botdetect.read_features_csv(args.features)
    report = botdetect.eval_classification(model, rows)
    _emit(json_bytes(report.to_dict()), args.out)
    return 0


def cmd_bench_register(args, config: GlobalConfig) -> int:
    registry = _registry(args, config)
    spec = BenchmarkSpec.from_dict(json.loads(Path(args.spec).read_text("utf-8")))
    spec_id = registry.register(spec)
    _emit(json_bytes({"spec_id": spec_id}), args.out)
    return 0


def cmd_bench_run(args, config: GlobalConfig) -> int:
    registry = _registry(args, config)
    result = registry.run(args.spec_id)
    _emit(json_bytes(result.to_dict()), args.out)
    return 0


def cmd_bench_tasks(args, config: GlobalConfig) -> int:
    _emit(json_bytes(catalog_payload()), args.out)
    return 0


def cmd_bench_runs(args, config: GlobalConfig) -> int:
    registry = _registry(args, config)
    _emit(json_bytes(runs_payload(registry, args.spec_id)), args.out)
    return 0


def cmd_bench_checksum(args, config: GlobalConfig) -> int:
    _emit(json_bytes({"path": args.file, "checksum": dataset_checksum(args.file)}), args.out)
    return 0


def cmd_bench_leaderboard(args, config: GlobalConfig) -> int:
    if args.input:
        rows = json.loads(Path(args.input).read_text("utf-8"))
        board = build_leaderboard(
            [(r["entity"], float(r["value"])) for r in rows],
            index_name=args.index_name or (rows[0]["index"] if rows else ""),
            context=args.context or (rows[0]["month"] if rows else ""),
        )
        if args.top is not None:
            board = board.top(args.top)
        payload = board.to_dict()
    else:
        if not args.index:
            raise EcoperfError("give --input, or --index (with an optional --month)")
        weights = _load_weights(args, config)
        payload = leaderboard_payload(
            _store(args, config), args.index, args.month,
            top=args.top, weights=weights, workers=args.workers,
        )
    if args.format in ("csv", "html"):
        _emit(export_leaderboard(Leaderboard.from_dict(payload), args.format), args.out)
    else:
        _emit(json_bytes(payload), args.out)
    return 0


def cmd_bench_export(args, config: GlobalConfig) -> int:
    board = bench.parse_leaderboard_json(Path(args.board).read_bytes())
    _emit(export_leaderboard(board, args.format), args.out)
    return 0


def cmd_serve(args, config: GlobalConfig) -> int:
    import uvicorn

    from .service import create_app

    if args.store:
        config.store = Path(args.store)
    if args.registry:
        config.registry = Path(args.registry)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level=config.verbosity)
    return 0


# -- parser ----------------------------------------------------------------------


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write output bytes to this file instead of stdout")


def _add_format(p: argparse.ArgumentParser, choices=("json", "csv")) -> None:
    p.add_argument("--format", choices=choices, default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecoperf",
        description="Open-source ecosystem analytics benchmarking engine.",
    )
    parser.add_argument("--config", help="GlobalConfig JSON (defaults to $ECOPERF_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an NDJSON event log into a store")
    p.add_argument("--store", required=True)
    p.add_argument("--input", required=True, help="NDJSON file, or - for stdin")
    _add_out(p)
    p.set_defaults(func=cmd_ingest)

    graph = sub.add_parser("graph", help="build and transform collaboration graphs")
    gsub = graph.add_subparsers(dest="subcommand", required=True)

    p = gsub.add_parser("build", help="developer-repo bipartite graph from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--from", dest="month_from", type=_month_arg, required=True)
    p.add_argument("--to", dest="month_to", type=_month_arg, required=True)
    p.add_argument("--weights", help="event weight config JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph_build)

    p = gsub.add_parser("project", help="repo-repo projection through shared developers")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", choices=("min", "product"), default="min")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph_project)

    p = gsub.add_parser("topics", help="repo-repo shared-tag graph from a topics CSV")
    p.add_argument("--input", required=True, help="CSV: repo_name,topic1;topic2;...")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph_topics)

    p = gsub.add_parser("merge", help="blend relation and topic graphs")
    p.add_argument("--relation", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph_merge)

    index = sub.add_parser("index", help="compute activity/influence indices")
    isub = index.add_subparsers(dest="index", required=True)
    for index_id in INDEX_IDS:
        p = isub.add_parser(index_id)
        p.add_argument("--store", required=True)
        p.add_argument("--month", type=_month_arg, help="defaults to the store's latest month")
        p.add_argument("--weights")
        p.add_argument("--top", type=_positive_int)
        p.add_argument("--entity", choices=("repo", "dev", "all"), default="repo")
        p.add_argument("--damping", type=float, default=0.85)
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--max-iter", dest="max_iter", type=_positive_int, default=200)
        p.add_argument("--workers", type=_positive_int, default=1)
        p.add_argument("--scale", type=float, default=1.0)
        _add_format(p)
        _add_out(p)
        p.set_defaults(func=cmd_index, index=index_id)

    lp = sub.add_parser("linkpred", help="link-prediction benchmark")
    lsub = lp.add_subparsers(dest="subcommand", required=True)

    p = lsub.add_parser("split", help="hold out a test fraction of edges")
    p.add_argument("--graph", required=True)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-train", dest="out_train", required=True)
    p.add_argument("--out-test", dest="out_test", required=True)
    p.set_defaults(func=cmd_linkpred_split)

    p = lsub.add_parser("eval", help="sampled AUC for one scorer")
    p.add_argument("--graph", required=True)
    p.add_argument("--algo", required=True)
    p.add_argument("--test-fraction", dest="test_fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=_positive_int, default=10_000)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--dataset", help="dataset label for the report")
    p.add_argument("--no-timing", dest="no_timing", action="store_true",
                   help="report wall_time_seconds as 0.0 for byte-reproducible output")
    _add_format(p)
    _add_out(p)
    p.set_defaults(func=cmd_linkpred_eval)

    ts = sub.add_parser("ts", help="time-series completion and anomaly detection")
    tsub = ts.add_subparsers(dest="subcommand", required=True)

    p = tsub.add_parser("build", help="metric matrix from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--repos", required=True, help="comma-separated repo names")
    p.add_argument("--from", dest="month_from", type=_month_arg, required=True)
    p.add_argument("--to", dest="month_to", type=_month_arg, required=True)
    p.add_argument("--metric", choices=tseries.METRICS, default=tseries.METRIC_EVENT_COUNT)
    p.add_argument("--weights")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ts_build)

    p = tsub.add_parser("mask", help="hide observed cells for evaluation")
    p.add_argument("--matrix", required=True)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=(tseries.MASK_RANDOM, tseries.MASK_BLOCK_TAIL),
                   default=tseries.MASK_RANDOM)
    p.add_argument("--out-masked", dest="out_masked", required=True)
    p.add_argument("--out-heldout", dest="out_heldout", required=True)
    p.set_defaults(func=cmd_ts_mask)

    p = tsub.add_parser("impute", help="fill unobserved cells")
    p.add_argument("--matrix", required=True)
    p.add_argument("--method", choices=sorted(tseries.IMPUTERS), required=True)
    p.add_argument("--period", type=_positive_int, default=12)
    p.add_argument("--k", type=_positive_int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ts_impute)

    p = tsub.add_parser("eval", help="score predictions against held-out truth")
    p.add_argument("--heldout", required=True)
    p.add_argument("--predicted", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_ts_eval)

    p = tsub.add_parser("anomaly", help="robust-z anomaly scan over repo series")
    p.add_argument("--input", required=True, help="CSV: repo,month,value")
    p.add_argument("--window", type=_positive_int, required=True)
    p.add_argument("--threshold", type=float, default=3.5)
    _add_out(p)
    p.set_defaults(func=cmd_ts_anomaly)

    bot = sub.add_parser("bot", help="bot-account identification pipeline")
    bsub = bot.add_subparsers(dest="subcommand", required=True)

    p = bsub.add_parser("features", help="extract account feature vectors")
    p.add_argument("--store", required=True)
    p.add_argument("--logins", help="comma-separated account logins")
    p.add_argument("--logins-file", dest="logins_file")
    p.add_argument("--labels", help="CSV: actor_login,label")
    p.add_argument("--discover", action="store_true",
                   help="select accounts by event-count thresholds instead of a login list")
    p.add_argument("--active-only", dest="active_only", action="store_true",
                   help="with --discover, keep only accounts above the active-account bar")
    p.add_argument("--from", dest="month_from", type=_month_arg)
    p.add_argument("--to", dest="month_to", type=_month_arg)
    p.add_argument("--min-events", dest="min_events", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bot_features)

    p = bsub.add_parser("train", help="train the baseline logistic classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--epochs", type=_positive_int, default=500)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bot_train)

    p = bsub.add_parser("eval", help="classification metric suite on labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_bot_eval)

    bn = sub.add_parser("bench", help="benchmark registry and leaderboards")
    bnsub = bn.add_subparsers(dest="subcommand", required=True)

    p = bnsub.add_parser("register", help="validate and persist a benchmark spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--registry", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_bench_register)

    p = bnsub.add_parser("run", help="execute a registered benchmark")
    p.add_argument("--spec-id", dest="spec_id", required=True)
    p.add_argument("--registry", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_bench_run)

    p = bnsub.add_parser("tasks", help="list the built-in task catalog")
    _add_out(p)
    p.set_defaults(func=cmd_bench_tasks)

    p = bnsub.add_parser("runs", help="list persisted runs for a spec")
    p.add_argument("--spec-id", dest="spec_id", required=True)
    p.add_argument("--registry", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_bench_runs)

    p = bnsub.add_parser("checksum", help="sha256 checksum line for a dataset file")
    p.add_argument("--file", required=True)
    _add_out(p)
    p.set_defaults(func=cmd_bench_checksum)

    p = bnsub.add_parser("leaderboard", help="build a leaderboard from index results")
    p.add_argument("--input", help="JSON array of index results")
    p.add_argument("--store")
    p.add_argument("--month", type=_month_arg)
    p.add_argument("--index", choices=sorted(INDEX_IDS))
    p.add_argument("--index-name", dest="index_name")
    p.add_argument("--context")
    p.add_argument("--top", type=_positive_int)
    p.add_argument("--weights")
    p.add_argument("--workers", type=_positive_int, default=1)
    _add_format(p, choices=("json", "csv", "html"))
    _add_out(p)
    p.set_defaults(func=cmd_bench_leaderboard)

    p = bnsub.add_parser("export", help="re-export a leaderboard JSON file")
    p.add_argument("--board", required=True)
    p.add_argument("--format", choices=("json", "csv", "html"), required=True)
    _add_out(p)
    p.set_defaults(func=cmd_bench_export)

    p = sub.add_parser("serve", help="read-only HTTP service over store and registry")
    p.add_argument("--store")
    p.add_argument("--registry")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = GlobalConfig.load(args.config)
        return args.func(args, config)
    except (EcoperfError, NotImplementedError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
