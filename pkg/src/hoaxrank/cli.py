"""Command-line entry point: reproducible pipelines over the library.

Each subcommand validates its flags up front, runs one pipeline, writes its
artifacts under --out, and drops a run_metadata.json recording the config,
rng seeds, and input digests. Errors print a single machine-readable JSON
line on stderr and map to distinct exit codes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from . import __version__, engine, evaluate, ingest, kernels, logistic, synth
from .errors import (
    DegenerateTrainingError,
    HoaxrankError,
    InconsistentStateError,
    InsufficientCandidatesError,
    InvalidStreamError,
    NotFoundError,
)
from .graph import Edge, EdgeKind, InsertOutcome, NodeKind, ReputationGraph

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INVALID = 4
EXIT_NOT_FOUND = 5
EXIT_DATA = 6
EXIT_STATE = 7


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (NotFoundError, FileNotFoundError)):
        return EXIT_NOT_FOUND
    if isinstance(exc, (InsufficientCandidatesError, DegenerateTrainingError)):
        return EXIT_DATA
    if isinstance(exc, (InconsistentStateError, InvalidStreamError)):
        return EXIT_STATE
    if isinstance(exc, (OSError,)):
        return EXIT_IO
    if isinstance(exc, (HoaxrankError, ValueError)):
        return EXIT_INVALID
    raise exc


def _error_line(exc: Exception) -> str:
    return json.dumps(
        {"error": type(exc).__name__, "message": str(exc)}, sort_keys=True
    )


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_metadata(out_dir: Path, command: str, args: argparse.Namespace, extra: dict) -> None:
    inputs = {}
    for name in ("records", "updates", "seeds", "fake_sites", "list_a", "list_b",
                 "graph", "config", "spec", "sites", "classifications", "model",
                 "aggregators"):
        value = getattr(args, name.replace("-", "_"), None)
        if value is None:
            continue
        paths = value if isinstance(value, list) else [value]
        for p in paths:
            p = Path(p)
            if p.exists():
                inputs[str(p)] = _sha256(p)
    meta = {
        "command": command,
        "package_version": __version__,
        "argv": sys.argv[1:],
        "inputs_sha256": inputs,
        "started_utc": datetime.now(timezone.utc).isoformat(),
        **extra,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_metadata.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _engine_config(args: argparse.Namespace) -> engine.EngineConfig:
    """defaults < config file < explicit flags."""
    config = engine.EngineConfig()
    if getattr(args, "config", None):
        config = engine.EngineConfig.from_file(args.config)
    return config.with_overrides(
        c=getattr(args, "c", None),
        iterations=getattr(args, "iterations", None),
        propagation_depth=getattr(args, "depth", None),
        propagation_threshold=getattr(args, "kappa", None),
        include_editorial=getattr(args, "include_editorial", None),
        include_votes=getattr(args, "include_votes", None),
    )


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="plain-text engine config file")
    parser.add_argument("--c", type=float, help="regularization constant")
    parser.add_argument("--iterations", type=int, help="full fixpoint iterations")
    parser.add_argument("--depth", type=int, help="online propagation depth")
    parser.add_argument("--kappa", type=float, help="online propagation threshold")
    parser.add_argument("--include-editorial", action=argparse.BooleanOptionalAction)
    parser.add_argument("--include-votes", action=argparse.BooleanOptionalAction)
    parser.add_argument("--threads", type=int, default=None,
                        help="cap engine parallelism (1 = sequential)")


def _load_all_records(paths, max_malformed: float) -> list[ingest.ShareRecord]:
    records: list[ingest.ShareRecord] = []
    for path in paths:
        records.extend(ingest.load_records(path, max_malformed))
    return records


def _maybe_alternate(records, anchor: str | None):
    if anchor is None:
        return records
    return list(ingest.alternate_day_filter(records, date.fromisoformat(anchor)))


def _resolve_seeds(args, graph: ReputationGraph) -> engine.SeedLabels:
    """Seed labels from a url,label CSV or from a fake-site list + sampling."""
    if getattr(args, "seeds", None):
        fake_urls, nonfake_urls = ingest.load_url_seed_labels(args.seeds)
        fake = frozenset(graph.lookup_url(u) for u in fake_urls if graph.has_url(u))
        nonfake = frozenset(graph.lookup_url(u) for u in nonfake_urls if graph.has_url(u))
        return engine.SeedLabels(fake, nonfake)
    site_list = ingest.load_seed_list(args.fake_sites)
    return engine.select_training_labels(
        graph, site_list.domains, args.multiplier, args.rng_seed
    )


def _build_graph_from_args(args, config: engine.EngineConfig) -> ReputationGraph:
    if getattr(args, "graph", None):
        return ReputationGraph.load(args.graph)
    records = _load_all_records(args.records, args.max_malformed)
    records = _maybe_alternate(records, getattr(args, "alternate_days", None))
    bundles = ingest.collect_bundles(records)
    aggregators = ingest.DEFAULT_AGGREGATOR_SITES
    if getattr(args, "aggregators", None):
        aggregators = ingest.load_seed_list(args.aggregators).domains
    return ingest.build_graph(
        bundles,
        editorial=bool(getattr(args, "editorial", False)),
        aggregator_sites=aggregators,
        c=config.c,
    )


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def _cmd_synth(args) -> int:
    spec = synth.GeneratorSpec.from_toml(args.spec) if args.spec else synth.GeneratorSpec()
    if args.rng_seed is not None:
        spec = synth.GeneratorSpec(**{**spec.__dict__, "rng_seed": args.rng_seed})
    records, truth, fake_seeds, nonfake_seeds = synth.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ingest.serialize_records(records, out / "records.jsonl")
    synth.write_truth_csv(truth, out / "truth.csv")
    synth.write_seeds_csv(fake_seeds, nonfake_seeds, out / "seeds.csv")
    _write_metadata(out, "synth", args, {
        "generator_spec": {**{k: str(v) for k, v in spec.__dict__.items()}},
        "n_records": len(records),
    })
    print(f"wrote {len(records)} records, {len(truth.item_labels)} items -> {out}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    out = Path(args.out)
    records = _load_all_records(args.records, args.max_malformed)
    records = _maybe_alternate(records, args.alternate_days)
    bundles = ingest.collect_bundles(records)
    aggregators = ingest.DEFAULT_AGGREGATOR_SITES
    if args.aggregators:
        aggregators = ingest.load_seed_list(args.aggregators).domains
    graph = ingest.build_graph(
        bundles, editorial=args.editorial, aggregator_sites=aggregators, c=args.c or 0.02
    )
    out.mkdir(parents=True, exist_ok=True)
    graph.save(out / "graph.txt")
    extra = {
        "n_items": graph.n_items, "n_sources": graph.n_sources, "n_edges": graph.n_edges,
    }

    split_flags = (args.train_start, args.train_end, args.cutoff, args.test_start, args.test_end)
    if any(split_flags):
        if not all(split_flags):
            raise HoaxrankError(
                "temporal split needs all of --train-start --train-end --cutoff "
                "--test-start --test-end"
            )
        spec = ingest.SplitSpec.from_iso(*split_flags)
        train, test = ingest.temporal_split(records, spec)
        _write_bundle_records(train, out / "train_records.jsonl")
        _write_bundle_records(test, out / "test_records.jsonl")
        for name, part in (("train_urls.txt", train), ("test_urls.txt", test)):
            with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
                for url in part:
                    fh.write(url + "\n")
        extra["split"] = {
            "train_urls": len(train), "test_urls": len(test),
            "spec": [str(f) for f in split_flags],
        }
        print(f"split: {len(train)} train urls, {len(test)} test urls")

    _write_metadata(out, "ingest", args, extra)
    print(f"graph: {graph.n_items} items, {graph.n_sources} sources, {graph.n_edges} edges")
    return EXIT_OK


def _write_bundle_records(bundles: dict, path) -> None:
    """Flatten split bundles back into the JSONL record format."""
    records = []
    for bundle in bundles.values():
        for user, ts in bundle.tweets:
            records.append(ingest.ShareRecord(user, bundle.url, ts, bundle.title,
                                              bundle.description))
        for user, ts, polarity in bundle.votes:
            records.append(ingest.ShareRecord(user, bundle.url, ts, vote=polarity))
    records.sort(key=lambda r: (r.ts, r.user, r.url))
    ingest.serialize_records(records, path)


def _cmd_train_harmonic(args) -> int:
    config = _engine_config(args)
    if args.threads:
        kernels.set_threads(args.threads)
    graph = _build_graph_from_args(args, config)
    labels = _resolve_seeds(args, graph)
    engine.run_fixpoint(graph, labels, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    engine.write_classifications_csv(graph, out / "classifications.csv")
    if args.save_graph:
        graph.save(out / "graph.txt")
    _write_metadata(out, "train-harmonic", args, {
        "engine_config": config.as_dict(),
        "rng_seed": getattr(args, "rng_seed", None),
        "n_fake_seeds": len(labels.fake_items),
        "n_nonfake_seeds": len(labels.nonfake_items),
        "backend": kernels.active_backend(),
    })
    print(f"classified {graph.n_items} items -> {out / 'classifications.csv'}")
    return EXIT_OK


def _cmd_train_logistic(args) -> int:
    records = _load_all_records(args.records, args.max_malformed)
    records = _maybe_alternate(records, args.alternate_days)
    bundles = ingest.collect_bundles(records)
    if args.seeds:
        fake_urls, _ = ingest.load_url_seed_labels(args.seeds)
        is_fake = lambda b: b.url in fake_urls  # noqa: E731
    else:
        domains = ingest.load_seed_list(args.fake_sites).domains
        is_fake = lambda b: b.site in domains  # noqa: E731
    examples = [
        logistic.LabeledExample(
            logistic.featurize(b, args.mode),
            engine.Label.FAKE if is_fake(b) else engine.Label.RELIABLE,
        )
        for b in bundles.values()
    ]
    config = logistic.TrainConfig(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        l2=args.l2,
        rng_seed=args.rng_seed,
        balance_classes=not args.no_class_weights,
    )
    model = logistic.train(examples, args.mode, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    logistic.save_model(model, out / "model.tsv")
    _write_metadata(out, "train-logistic", args, {
        "train_config": config.as_dict(), "mode": args.mode, "n_examples": len(examples),
    })
    print(f"trained {args.mode} model on {len(examples)} urls -> {out / 'model.tsv'}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    config = _engine_config(args)
    if args.threads:
        kernels.set_threads(args.threads)
    graph = ReputationGraph.load(args.graph)
    labels = _resolve_seeds(args, graph)
    engine.run_fixpoint(graph, labels, config)
    cls = engine.reputation(graph, ingest.canonicalize_url(args.url))
    print(f"{args.url},{cls.reputation!r},{cls.label.value}")
    if args.out:
        _write_metadata(Path(args.out), "classify", args, {"engine_config": config.as_dict()})
    return EXIT_OK


def _cmd_stream(args) -> int:
    config = _engine_config(args)
    if args.threads:
        kernels.set_threads(args.threads)
    graph = ReputationGraph.load(args.graph)
    labels = _resolve_seeds(args, graph)
    engine.run_fixpoint(graph, labels, config)

    updates = _load_all_records(args.updates, args.max_malformed)
    flips: list[tuple[str, float, str]] = []
    last_ts = None
    for record in updates:
        if last_ts is not None and record.ts < last_ts:
            raise InvalidStreamError("update stream not sorted by timestamp")
        last_ts = record.ts
        url = ingest.canonicalize_url(record.url)
        item = graph.add_item(url)
        source = graph.add_source(record.user, NodeKind.USER)
        kind = EdgeKind.TWEET if record.vote is None else EdgeKind.VOTE
        polarity = 1 if record.vote is None else record.vote
        if graph.add_edge(item, source, polarity, kind, record.ts) is InsertOutcome.INSERTED:
            for node in engine.ingest_edge_online(
                graph, Edge(item, source, polarity, kind, record.ts), config
            ):
                flips.append((graph.url_of(node), record.ts, engine.label_of(graph.item_q[node.index]).value))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    import csv as _csv

    with open(out / "flips.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["url", "ts", "new_label"])
        for url, ts, label in flips:
            writer.writerow([url, repr(ts), label])
    engine.write_classifications_csv(graph, out / "classifications.csv")
    _write_metadata(out, "stream", args, {
        "engine_config": config.as_dict(), "n_updates": len(updates), "n_flips": len(flips),
    })
    print(f"replayed {len(updates)} updates, {len(flips)} label flips -> {out}")
    return EXIT_OK


def _read_classifications_csv(path) -> dict[str, engine.Classification]:
    import csv as _csv

    table: dict[str, engine.Classification] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.DictReader(fh)
        for row in reader:
            q = float(row["q"])
            table[row["url"]] = engine.Classification(engine.label_of(q), q)
    return table


def _cmd_eval_recall(args) -> int:
    table = _read_classifications_csv(args.classifications)
    sites = ingest.load_seed_list(args.fake_sites)
    test_urls = list(table)
    if args.test_urls:
        with open(args.test_urls, "r", encoding="utf-8") as fh:
            test_urls = [ingest.canonicalize_url(line.strip()) for line in fh if line.strip()]
    report = evaluate.recall_report(table, sites.domains, test_urls)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "recall.csv")
    (out / "recall.txt").write_text(report.summary(), encoding="utf-8")
    _write_metadata(out, "eval-recall", args, {})
    print(report.summary(), end="")
    return EXIT_OK


def _cmd_eval_sites(args) -> int:
    table = _read_classifications_csv(args.classifications)
    report = evaluate.site_flag_rates(table, min_urls=args.min_urls)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "site_flag_rates.csv")
    (out / "site_flag_rates.txt").write_text(report.summary(), encoding="utf-8")
    _write_metadata(out, "eval-sites", args, {})
    print(report.summary(), end="")
    return EXIT_OK


def _cmd_eval_crosslist(args) -> int:
    table = _read_classifications_csv(args.classifications)
    list_a = ingest.load_seed_list(args.list_a)
    list_b = ingest.load_seed_list(args.list_b)
    report = evaluate.cross_list_detection(
        table, list_a.domains, list_b.domains,
        min_urls=args.min_urls, threshold_pct=args.threshold_pct,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "crosslist.csv")
    (out / "crosslist.txt").write_text(report.summary(), encoding="utf-8")
    _write_metadata(out, "eval-crosslist", args, {})
    print(report.summary(), end="")
    return EXIT_OK


def _cmd_eval_correlation(args) -> int:
    records = _load_all_records(args.records, args.max_malformed)
    if args.sites:
        with open(args.sites, "r", encoding="utf-8") as fh:
            sites = [line.strip().lower() for line in fh if line.strip()]
    else:
        sites = [args.site_a.lower(), args.site_b.lower()]
    matrix = evaluate.correlation_matrix(records, sites)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    evaluate.write_correlation_csv(sites, matrix, out / "correlation.csv")
    _write_metadata(out, "eval-correlation", args, {"n_sites": len(sites)})
    if len(sites) == 2:
        print(f"correlation({sites[0]}, {sites[1]}) = {matrix[0][1]:.4f}")
    else:
        print(f"wrote {len(sites)}x{len(sites)} correlation matrix -> {out / 'correlation.csv'}")
    return EXIT_OK


def _parse_interval(text: str):
    if text == evaluate.EVERY_EDGE:
        return evaluate.EVERY_EDGE
    units = {"d": 86400, "h": 3600, "m": 60, "s": 1}
    if text and text[-1] in units:
        return timedelta(seconds=float(text[:-1]) * units[text[-1]])
    return timedelta(seconds=float(text))


def _cmd_eval_agreement(args) -> int:
    config = _engine_config(args)
    if args.threads:
        kernels.set_threads(args.threads)
    records = _load_all_records(args.records, args.max_malformed)
    fake_urls, nonfake_urls = ingest.load_url_seed_labels(args.seeds)
    report = evaluate.replay_agreement(
        records,
        _parse_interval(args.interval),
        config=config,
        fake_seed_urls=fake_urls,
        nonfake_seed_urls=nonfake_urls,
        threshold=args.threshold,
        editorial=args.editorial,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "agreement.csv")
    (out / "agreement.txt").write_text(report.summary(), encoding="utf-8")
    _write_metadata(out, "eval-agreement", args, {
        "engine_config": config.as_dict(), "interval": args.interval,
        "threshold": args.threshold,
    })
    print(report.summary(), end="")
    return EXIT_OK


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hoaxrank",
        description="Label news URLs as fake or reliable from who shared them.",
    )
    parser.add_argument("--version", action="version", version=f"hoaxrank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def records_flags(p, required=True):
        p.add_argument("--records", nargs="+", required=required,
                       help="JSONL share-record files")
        p.add_argument("--max-malformed", type=float, default=0.05,
                       help="tolerated malformed-line fraction")
        p.add_argument("--alternate-days", metavar="ANCHOR_DATE", default=None,
                       help="keep only records on alternating days from this ISO date")

    p = sub.add_parser("synth", help="generate a planted synthetic dataset")
    p.add_argument("--spec", help="generator spec TOML file")
    p.add_argument("--rng-seed", type=int, default=None, help="override spec rng_seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="parse records and write a graph snapshot")
    records_flags(p)
    p.add_argument("--editorial", action="store_true", help="add site editorial edges")
    p.add_argument("--aggregators", help="site list exempt from editorial edges")
    p.add_argument("--c", type=float, default=0.02)
    for flag, text in (
        ("--train-start", "temporal split: first train day (ISO date, UTC)"),
        ("--train-end", "temporal split: last train day"),
        ("--cutoff", "temporal split: train tweets strictly before this day"),
        ("--test-start", "temporal split: first test day"),
        ("--test-end", "temporal split: last test day"),
    ):
        p.add_argument(flag, default=None, help=text)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train-harmonic", help="run the batch fixpoint and classify")
    records_flags(p, required=False)
    p.add_argument("--graph", help="load a graph snapshot instead of records")
    p.add_argument("--editorial", action="store_true")
    p.add_argument("--aggregators")
    p.add_argument("--seeds", help="url,label seed CSV")
    p.add_argument("--fake-sites", help="fake seed-site list (one domain per line)")
    p.add_argument("--multiplier", type=int, default=2,
                   help="non-fake sample multiplier when using --fake-sites")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--save-graph", action="store_true")
    _add_engine_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_harmonic)

    p = sub.add_parser("train-logistic", help="train the sparse logistic baseline")
    records_flags(p)
    p.add_argument("--seeds", help="url,label seed CSV")
    p.add_argument("--fake-sites", help="fake seed-site list")
    p.add_argument("--mode", choices=logistic.MODES, default="U")
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--no-class-weights", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_logistic)

    p = sub.add_parser("classify", help="look up one URL's reputation")
    p.add_argument("--graph", required=True)
    p.add_argument("--seeds")
    p.add_argument("--fake-sites")
    p.add_argument("--multiplier", type=int, default=2)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--url", required=True)
    _add_engine_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("stream", help="replay updates through online propagation")
    p.add_argument("--graph", required=True, help="base graph snapshot")
    p.add_argument("--updates", nargs="+", required=True, help="JSONL update records")
    p.add_argument("--max-malformed", type=float, default=0.05)
    p.add_argument("--seeds")
    p.add_argument("--fake-sites")
    p.add_argument("--multiplier", type=int, default=2)
    p.add_argument("--rng-seed", type=int, default=0)
    _add_engine_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stream)

    p = sub.add_parser("eval-recall", help="fake / non-fake recall report")
    p.add_argument("--classifications", required=True)
    p.add_argument("--fake-sites", required=True)
    p.add_argument("--test-urls", help="optional URL list restricting the report")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_recall)

    p = sub.add_parser("eval-sites", help="per-site flag-rate report")
    p.add_argument("--classifications", required=True)
    p.add_argument("--min-urls", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_sites)

    p = sub.add_parser("eval-crosslist", help="cross-list detection report")
    p.add_argument("--classifications", required=True)
    p.add_argument("--list-a", required=True, help="seed list the classifier used")
    p.add_argument("--list-b", required=True, help="independent list to recover")
    p.add_argument("--min-urls", type=int, default=20)
    p.add_argument("--threshold-pct", type=float, default=5.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_crosslist)

    p = sub.add_parser("eval-correlation", help="user-overlap site correlation")
    records_flags(p)
    p.add_argument("--sites", help="file with one site per line (matrix mode)")
    p.add_argument("--site-a")
    p.add_argument("--site-b")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_correlation)

    p = sub.add_parser("eval-agreement", help="online-vs-fixpoint replay agreement")
    records_flags(p)
    p.add_argument("--seeds", required=True, help="url,label seed CSV")
    p.add_argument("--interval", default="1d",
                   help="recompute interval: e.g. 1d, 12h, 3600s, or 'edge'")
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--editorial", action="store_true")
    _add_engine_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval_agreement)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "eval-correlation":
        if not args.sites and not (args.site_a and args.site_b):
            parser.error("eval-correlation needs --sites or both --site-a and --site-b")
    for cmd in ("train-harmonic", "classify", "stream", "train-logistic"):
        if getattr(args, "command", None) == cmd:
            if not getattr(args, "seeds", None) and not getattr(args, "fake_sites", None):
                parser.error(f"{cmd} needs --seeds or --fake-sites")
    if getattr(args, "command", None) == "train-harmonic":
        if not getattr(args, "graph", None) and not getattr(args, "records", None):
            parser.error("train-harmonic needs --records or --graph")
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        code = _exit_code(exc)
        print(_error_line(exc), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
