"""Command-line entry point.

Subcommands map one-to-one onto the package's operations: trace
replay, synthetic trace generation, the API server, the evaluation
harness, the text analytics, and manual corpus labeling.
"""

from __future__ import annotations

import argparse
import os
import sys

from clickfeed.analytics import (
    KeywordSet,
    extract_keywords,
    keyword_popularity,
    load_page_corpus,
    pearson,
)
from clickfeed.classifier import (
    CORPUS_UNAVAILABLE,
    FeatureVector,
    load_corpus,
    oversample_minority,
    save_corpus,
)
from clickfeed.engine import Engine
from clickfeed.harness import (
    bench_throughput,
    eval_classifier,
    eval_filters,
    filters_table,
    filters_tsv,
    subsets_table,
    subsets_tsv,
)
from clickfeed.model import ClickfeedError, EngineConfig, load_config
from clickfeed.synth import generate_synthetic, load_spec

LISTEN_ENV = "CLICKFEED_LISTEN"
CONFIG_ENV = "CLICKFEED_CONFIG"

DEFAULT_SUBSETS = (
    ("hostname_flag",),
    ("url_length",),
    ("url_length", "hostname_flag"),
    ("url_length", "periodicity_flag"),
    ("url_length", "hostname_flag", "freq_as_hostname", "rap_xcorr",
     "periodicity_flag"),
)


def _engine_config(path: str | None) -> EngineConfig:
    path = path or os.environ.get(CONFIG_ENV)
    return load_config(path) if path else EngineConfig()


def _print_summary(engine: Engine, stats) -> None:
    status = engine.status()
    snapshot = engine.snapshot()
    print(f"parsed\t{stats.parsed}")
    print(f"skipped_lines\t{stats.skipped}")
    for key in ("requests_processed", "malformed_urls", "dropped_dnt",
                "dropped_agent", "dropped_self_referer", "candidates_emitted",
                "content_decisions", "portal_decisions", "views_recorded",
                "snapshots_published", "knowledge_size", "memory_mb"):
        print(f"{key}\t{status[key]}")
    print(f"live_items\t{len(snapshot.live)}")
    print(f"hot_items\t{len(snapshot.hot)}")
    for window, items in snapshot.top.items():
        print(f"top_{window}_items\t{len(items)}")


def cmd_replay(args) -> int:
    engine = Engine(_engine_config(args.config))
    stats = engine.run(args.trace, speed=args.speed)
    _print_summary(engine, stats)
    return 0


def cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    trace_path, labels_path = generate_synthetic(spec, args.out)
    print(trace_path)
    print(labels_path)
    return 0


def _parse_listen(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ClickfeedError(f"listen address must be HOST:PORT, got {text!r}")
    return host, int(port)


def cmd_serve(args) -> int:
    import uvicorn

    from clickfeed.service import create_app

    engine = Engine(_engine_config(args.config),
                    knowledge_path=args.knowledge,
                    model_dir=args.model_dir)
    app = create_app(engine, cors_origins=args.cors_origin or None)
    listen = args.listen or os.environ.get(LISTEN_ENV) or "127.0.0.1:8080"
    host, port = _parse_listen(listen)

    if args.trace and args.speed == 0.0:
        stats = engine.run(args.trace)
        print(f"replayed {stats.parsed} records from {args.trace}",
              file=sys.stderr)
    elif args.trace:
        import threading
        replayer = threading.Thread(
            target=engine.run, args=(args.trace, args.speed), daemon=True)
        replayer.start()
    else:
        engine.ready = True

    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def _read_compositions(path: str) -> list[str]:
    names = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line and not line.startswith("#"):
                names.append(line)
    return names


def cmd_eval_filters(args) -> int:
    reports = eval_filters(args.trace, args.labels,
                           _read_compositions(args.compositions))
    sys.stdout.write(filters_tsv(reports) if args.tsv
                     else filters_table(reports))
    return 0


def _parse_subsets(text: str) -> list[tuple[str, ...]]:
    subsets = []
    for part in text.split(";"):
        part = part.strip()
        if part:
            subsets.append(tuple(f.strip() for f in part.split(",")))
    return subsets


def cmd_eval_classifier(args) -> int:
    samples = load_corpus(args.corpus)
    subsets = _parse_subsets(args.subsets) if args.subsets \
        else list(DEFAULT_SUBSETS)
    reports = eval_classifier(samples, subsets, folds=args.folds,
                              runs=args.runs, seed=args.seed)
    sys.stdout.write(subsets_tsv(reports) if args.tsv
                     else subsets_table(reports))
    return 0


def cmd_bench(args) -> int:
    result = bench_throughput(args.trace, _engine_config(args.config))
    for key in ("records", "elapsed_seconds", "records_per_second",
                "requests_per_hour", "peak_memory_mb"):
        print(f"{key}\t{result[key]}")
    return 0


def _load_views(path: str) -> dict[str, int]:
    views = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            url, _, count = line.partition("\t")
            if not count:
                raise ClickfeedError(f"{path}:{lineno}: expected url<TAB>count")
            views[url] = int(count)
    return views


def cmd_analyze_keywords(args) -> int:
    corpus = load_page_corpus(args.corpus)
    views = _load_views(args.views)
    pages = []
    for url, count in views.items():
        page = corpus.get(url)
        if page is None:
            continue
        pages.append((extract_keywords(page.title, page.body), count))
    popularity = keyword_popularity(pages)
    ranked = sorted(popularity.weights.items(), key=lambda kv: (-kv[1], kv[0]))
    for keyword, weight in ranked[:args.top] if args.top else ranked:
        print(f"{keyword}\t{weight}")
    return 0


def _load_keyword_set(path: str) -> KeywordSet:
    weights = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            keyword, _, weight = line.partition("\t")
            weights[keyword] = int(weight)
    return KeywordSet(population_id=path, weights=weights)


def cmd_analyze_pearson(args) -> int:
    value = pearson(_load_keyword_set(args.a), _load_keyword_set(args.b))
    print(f"{value!r}")
    return 0


def cmd_analyze_liveness(args) -> int:
    engine = Engine(_engine_config(args.config))
    engine.run(args.trace)
    print("bin_start\tactive_users\tuser_urls\tnew_hot_urls")
    for sample in engine.liveness.samples(last_n=args.bins):
        print(f"{sample.bin_start:.0f}\t{sample.active_users}"
              f"\t{sample.user_urls}\t{sample.new_hot_urls}")
    return 0


def _parse_candidate_row(line: str) -> tuple[str, FeatureVector]:
    url, length, hostname, freq, rap, per = line.split("\t")
    return url, FeatureVector(
        url_length=int(length),
        hostname_flag=int(hostname),
        freq_as_hostname=int(freq),
        rap_xcorr=None if rap == CORPUS_UNAVAILABLE else float(rap),
        periodicity_flag=None if per == CORPUS_UNAVAILABLE else int(per),
    )


def cmd_label(args) -> int:
    """Interactive labeling: one candidate row per line on --candidates,
    answers p/c/s/q on stdin, labeled corpus written to --out."""
    samples = []
    with open(args.candidates, "r", encoding="utf-8") as handle:
        rows = [line.rstrip("\n") for line in handle
                if line.strip() and not line.startswith("#")]
    for row in rows:
        url, fv = _parse_candidate_row(row)
        print(f"{url} -> [p]ortal / [c]ontent / [s]kip / [q]uit? ",
              end="", file=sys.stderr, flush=True)
        answer = sys.stdin.readline().strip().lower()
        if answer == "q":
            break
        if answer == "p":
            samples.append((fv, "portal"))
        elif answer == "c":
            samples.append((fv, "content"))
    if args.oversample:
        samples = oversample_minority(samples, seed=args.seed)
    save_corpus(samples, args.out)
    print(f"wrote {len(samples)} labeled samples to {args.out}",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clickfeed",
        description="passive clickstream content-promotion engine")
    sub = parser.add_subparsers(dest="command", required=True)

    replay = sub.add_parser("replay", help="replay a trace through the engine")
    replay.add_argument("--trace", required=True)
    replay.add_argument("--speed", type=float, default=0.0,
                        help="0 = as fast as possible; 1.0 = real time")
    replay.add_argument("--config")
    replay.set_defaults(func=cmd_replay)

    synth = sub.add_parser("synth", help="generate a labelled synthetic trace")
    synth.add_argument("--spec", required=True)
    synth.add_argument("--out", required=True)
    synth.set_defaults(func=cmd_synth)

    serve = sub.add_parser("serve", help="run the JSON API server")
    serve.add_argument("--config", help=f"engine config (or ${CONFIG_ENV})")
    serve.add_argument("--trace", help="bootstrap trace replayed at startup")
    serve.add_argument("--speed", type=float, default=0.0)
    serve.add_argument("--listen", help=f"HOST:PORT (or ${LISTEN_ENV})")
    serve.add_argument("--cors-origin", action="append",
                       help="allowed CORS origin; repeatable")
    serve.add_argument("--knowledge", help="knowledge database log path")
    serve.add_argument("--model-dir", help="directory of persisted models")
    serve.set_defaults(func=cmd_serve)

    evaluate = sub.add_parser("eval", help="evaluation protocols")
    eval_sub = evaluate.add_subparsers(dest="protocol", required=True)

    filters = eval_sub.add_parser("filters",
                                  help="recall/precision per composition")
    filters.add_argument("--trace", required=True)
    filters.add_argument("--labels", required=True)
    filters.add_argument("--compositions", required=True,
                         help="file of composition strings, one per line")
    filters.add_argument("--tsv", action="store_true")
    filters.set_defaults(func=cmd_eval_filters)

    clf = eval_sub.add_parser("classifier",
                              help="cross-validated feature subsets")
    clf.add_argument("--corpus", required=True)
    clf.add_argument("--folds", type=int, default=10)
    clf.add_argument("--runs", type=int, default=10)
    clf.add_argument("--seed", type=int, default=0)
    clf.add_argument("--subsets",
                     help="semicolon-separated subsets of comma-joined features")
    clf.add_argument("--tsv", action="store_true")
    clf.set_defaults(func=cmd_eval_classifier)

    bench = sub.add_parser("bench", help="pipeline throughput measurement")
    bench.add_argument("--trace", required=True)
    bench.add_argument("--config")
    bench.set_defaults(func=cmd_bench)

    analyze = sub.add_parser("analyze", help="text and liveness analytics")
    analyze_sub = analyze.add_subparsers(dest="analysis", required=True)

    keywords = analyze_sub.add_parser("keywords",
                                      help="keyword popularity of viewed pages")
    keywords.add_argument("--corpus", required=True,
                          help="page corpus (url, title, body per line)")
    keywords.add_argument("--views", required=True,
                          help="view counts, url<TAB>count per line")
    keywords.add_argument("--top", type=int, default=0,
                          help="print only the N heaviest keywords")
    keywords.set_defaults(func=cmd_analyze_keywords)

    corr = analyze_sub.add_parser("pearson",
                                  help="correlation of two keyword files")
    corr.add_argument("--a", required=True)
    corr.add_argument("--b", required=True)
    corr.set_defaults(func=cmd_analyze_pearson)

    live = analyze_sub.add_parser("liveness",
                                  help="activity bins after replaying a trace")
    live.add_argument("--trace", required=True)
    live.add_argument("--config")
    live.add_argument("--bins", type=int, default=None)
    live.set_defaults(func=cmd_analyze_liveness)

    label = sub.add_parser("label", help="manually label candidate features")
    label.add_argument("--candidates", required=True,
                       help="url + feature columns, one candidate per line")
    label.add_argument("--out", required=True)
    label.add_argument("--oversample", action="store_true",
                       help="duplicate minority-class samples until balanced")
    label.add_argument("--seed", type=int, default=0)
    label.set_defaults(func=cmd_label)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClickfeedError as error:
        print(f"clickfeed: {error}", file=sys.stderr)
        return 1
    except FileNotFoundError as error:
        print(f"clickfeed: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
