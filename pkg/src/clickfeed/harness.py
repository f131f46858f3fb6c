"""Desk-scale evaluation protocols.

Three measurements: recall/precision of filter compositions against a
labelled trace, cross-validated comparison of classifier feature
subsets, and end-to-end pipeline throughput. Each returns plain report
objects; TSV and table renderers live alongside for the CLI.
"""

from __future__ import annotations

import random
import re
import time
from dataclasses import dataclass, replace

from clickfeed.classifier import classify, train
from clickfeed.detector import ClickDetector, DetectorConfig
from clickfeed.engine import Engine
from clickfeed.ingest import replay
from clickfeed.model import ClickfeedError, EngineConfig, MalformedUrlError, \
    canonicalize_url
from clickfeed.patterns import PatternSet
from clickfeed.synth import load_labels


class CompositionError(ClickfeedError, ValueError):
    """A filter-composition string names an unknown filter."""


class LabelMismatchError(ClickfeedError, ValueError):
    """The label sidecar references URLs the trace never contains."""


class InsufficientDataError(ClickfeedError, ValueError):
    """Too few samples per class for the requested fold count."""


@dataclass(frozen=True)
class EvalReport:
    """Recall/precision of one filter composition on one labelled trace."""

    name: str
    recall: float
    precision: float
    processing_time_ms: float
    true_positives: int
    false_positives: int
    false_negatives: int


@dataclass(frozen=True)
class SubsetReport:
    """Cross-validated quality of one classifier feature subset."""

    features: tuple[str, ...]
    portal_precision: float
    portal_recall: float
    content_precision: float
    content_recall: float
    accuracy: float


_COUNTED = re.compile(r"^(children|child|params?)\((\d+)\)$")


def parse_composition(text: str) -> DetectorConfig:
    """Translate a composition string into a detector configuration.

    Tokens are joined with '+' and case-insensitive; an optional 'f-'
    prefix is accepted, so 'F-Ref+F-Type+F-Children(2)+F-Param(0)' and
    'ref+type+children(2)+param(0)' are the same composition. 'ref' is
    the click-reconstruction mechanism itself and must be present; the
    other tokens switch individual filters on.
    """
    config = DetectorConfig(min_children=1, max_params=None,
                            require_social=False, use_type_filter=False,
                            use_ad_filter=False)
    saw_ref = False
    for raw in text.split("+"):
        token = raw.strip().lower()
        if token.startswith("f-"):
            token = token[2:]
        counted = _COUNTED.match(token)
        if counted:
            value = int(counted.group(2))
            if counted.group(1).startswith("child"):
                config = replace(config, min_children=value)
            else:
                config = replace(config, max_params=value)
        elif token in ("ref", "referer"):
            saw_ref = True
        elif token == "type":
            config = replace(config, use_type_filter=True)
        elif token in ("ad", "ads"):
            config = replace(config, use_ad_filter=True)
        elif token == "social":
            config = replace(config, require_social=True)
        elif token in ("text", "metadata"):
            config = replace(config, require_text_and_title=True)
        else:
            raise CompositionError(f"unknown filter token {raw.strip()!r}")
    if not saw_ref:
        raise CompositionError(
            "every composition builds on the referer mechanism; "
            "include the 'ref' token")
    return config


def _trace_url_keys(trace_path: str) -> set[str]:
    keys = set()
    for record in replay(trace_path):
        for text in (record.url, record.referer):
            if text is None:
                continue
            try:
                keys.add(canonicalize_url(text).render())
            except MalformedUrlError:
                pass
    return keys


def eval_filters(trace_path: str, labels_path: str, compositions: list[str],
                 observation_seconds: float = 15.0,
                 patterns: PatternSet | None = None) -> list[EvalReport]:
    """Run each composition over the trace and score it against labels.

    Empty denominators read as perfect: nothing to find and nothing
    wrongly found.
    """
    if patterns is None:
        patterns = PatternSet.load_default()
    truth = load_labels(labels_path).candidate
    missing = truth - _trace_url_keys(trace_path)
    if missing:
        raise LabelMismatchError(
            f"{len(missing)} labelled URLs never appear in the trace, "
            f"e.g. {sorted(missing)[0]!r}")

    reports = []
    for name in compositions:
        config = replace(parse_composition(name),
                         observation_seconds=observation_seconds)
        detector = ClickDetector(config, patterns)
        predicted: set[str] = set()
        started = time.perf_counter()
        for record in replay(trace_path):
            for event in detector.process(record):
                predicted.add(event.url.render())
        for event in detector.drain():
            predicted.add(event.url.render())
        elapsed_ms = (time.perf_counter() - started) * 1000.0

        tp = len(predicted & truth)
        fp = len(predicted - truth)
        fn = len(truth - predicted)
        reports.append(EvalReport(
            name=name,
            recall=tp / (tp + fn) if tp + fn else 1.0,
            precision=tp / (tp + fp) if tp + fp else 1.0,
            processing_time_ms=elapsed_ms,
            true_positives=tp, false_positives=fp, false_negatives=fn))
    return reports


def _stratified_folds(samples, folds: int, rng: random.Random):
    by_label: dict[str, list] = {}
    for sample in samples:
        by_label.setdefault(sample[1], []).append(sample)
    for label, group in sorted(by_label.items()):
        if len(group) < 2 * folds:
            raise InsufficientDataError(
                f"class {label!r} has {len(group)} samples; "
                f"{folds}-fold validation needs at least {2 * folds}")
    chunks: list[list] = [[] for _ in range(folds)]
    for label in sorted(by_label):
        group = list(by_label[label])
        rng.shuffle(group)
        for i, sample in enumerate(group):
            chunks[i % folds].append(sample)
    return chunks


def _safe(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 1.0


def eval_classifier(samples, feature_subsets, folds: int = 10,
                    runs: int = 10, seed: int = 0) -> list[SubsetReport]:
    """Stratified k-fold cross-validation, averaged over independent runs."""
    reports = []
    for subset in feature_subsets:
        totals = {"pp": 0.0, "pr": 0.0, "cp": 0.0, "cr": 0.0, "acc": 0.0}
        for run in range(runs):
            rng = random.Random(f"{seed}:{run}")
            chunks = _stratified_folds(samples, folds, rng)
            confusion = {("portal", "portal"): 0, ("portal", "content"): 0,
                         ("content", "portal"): 0, ("content", "content"): 0}
            for i in range(folds):
                held_out = chunks[i]
                training = [s for j in range(folds) if j != i for s in chunks[j]]
                model = train(training, subset)
                for features, label in held_out:
                    predicted, _ = classify(model, features)
                    confusion[(label, predicted)] += 1
            pp_hit = confusion[("portal", "portal")]
            cc_hit = confusion[("content", "content")]
            predicted_portal = pp_hit + confusion[("content", "portal")]
            predicted_content = cc_hit + confusion[("portal", "content")]
            actual_portal = pp_hit + confusion[("portal", "content")]
            actual_content = cc_hit + confusion[("content", "portal")]
            totals["pp"] += _safe(pp_hit, predicted_portal)
            totals["pr"] += _safe(pp_hit, actual_portal)
            totals["cp"] += _safe(cc_hit, predicted_content)
            totals["cr"] += _safe(cc_hit, actual_content)
            totals["acc"] += _safe(pp_hit + cc_hit, len(samples))
        reports.append(SubsetReport(
            features=tuple(subset),
            portal_precision=totals["pp"] / runs,
            portal_recall=totals["pr"] / runs,
            content_precision=totals["cp"] / runs,
            content_recall=totals["cr"] / runs,
            accuracy=totals["acc"] / runs))
    return reports


def bench_throughput(trace_path: str, config: EngineConfig | None = None) -> dict:
    """Replay the trace through a full engine as fast as possible.

    No API server, no pacing: the number is the pipeline's own cost.
    Peak memory is the process high-water mark, so it includes the
    interpreter; the ceiling it is compared against does too.
    """
    engine = Engine(config or EngineConfig())
    started = time.perf_counter()
    stats = engine.run(trace_path, speed=0.0)
    elapsed = time.perf_counter() - started
    records = stats.parsed
    rate = records / elapsed if elapsed > 0 else float("inf")
    return {
        "records": records,
        "elapsed_seconds": elapsed,
        "records_per_second": rate,
        "requests_per_hour": rate * 3600.0,
        "peak_memory_mb": engine.status()["memory_mb"],
    }


# ------------------------------------------------------------ rendering

FILTER_COLUMNS = ("composition", "recall", "precision", "time_ms",
                  "tp", "fp", "fn")
SUBSET_COLUMNS = ("features", "portal_p", "portal_r", "content_p",
                  "content_r", "accuracy")


def _filter_rows(reports: list[EvalReport]) -> list[tuple[str, ...]]:
    return [(r.name, f"{r.recall:.4f}", f"{r.precision:.4f}",
             f"{r.processing_time_ms:.1f}", str(r.true_positives),
             str(r.false_positives), str(r.false_negatives))
            for r in reports]


def _subset_rows(reports: list[SubsetReport]) -> list[tuple[str, ...]]:
    return [("+".join(r.features), f"{r.portal_precision:.4f}",
             f"{r.portal_recall:.4f}", f"{r.content_precision:.4f}",
             f"{r.content_recall:.4f}", f"{r.accuracy:.4f}")
            for r in reports]


def render_tsv(columns: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    lines = ["\t".join(columns)]
    lines += ["\t".join(row) for row in rows]
    return "\n".join(lines) + "\n"


def render_table(columns: tuple[str, ...], rows: list[tuple[str, ...]]) -> str:
    widths = [max(len(columns[i]), *(len(row[i]) for row in rows)) if rows
              else len(columns[i]) for i in range(len(columns))]
    def line(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()
    out = [line(columns), line(tuple("-" * w for w in widths))]
    out += [line(row) for row in rows]
    return "\n".join(out) + "\n"


def filters_tsv(reports: list[EvalReport]) -> str:
    return render_tsv(FILTER_COLUMNS, _filter_rows(reports))


def filters_table(reports: list[EvalReport]) -> str:
    return render_table(FILTER_COLUMNS, _filter_rows(reports))


def subsets_tsv(reports: list[SubsetReport]) -> str:
    return render_tsv(SUBSET_COLUMNS, _subset_rows(reports))


def subsets_table(reports: list[SubsetReport]) -> str:
    return render_table(SUBSET_COLUMNS, _subset_rows(reports))
