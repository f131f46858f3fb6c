"""Tests for the evaluation harness: composition parsing, the
recall/precision sweep, cross-validated subset comparison, throughput
measurement, and report rendering."""

from __future__ import annotations

import dataclasses

import pytest
from pytest import approx

from clickfeed.classifier import FeatureVector, load_corpus
from clickfeed.harness import (
    CompositionError,
    InsufficientDataError,
    LabelMismatchError,
    bench_throughput,
    eval_classifier,
    eval_filters,
    filters_table,
    filters_tsv,
    parse_composition,
    subsets_table,
    subsets_tsv,
)
from clickfeed.patterns import data_file
from clickfeed.synth import SyntheticTraceSpec, generate_synthetic

STRICT = "F-Ref+F-Type+F-Children(2)+F-Param(0)"
LOOSE = "F-Ref+F-Type"


def make_trace(tmp_path_factory, name, **kwargs):
    out = tmp_path_factory.mktemp(name)
    spec = SyntheticTraceSpec(**kwargs)
    return generate_synthetic(spec, str(out))


@pytest.fixture(scope="module")
def ideal_trace(tmp_path_factory):
    # every click well-formed; one tracker iframe per click as noise
    return make_trace(tmp_path_factory, "ideal", n_user_urls=40,
                      clicks_per_content_url="const:2", noise_per_click=1.0,
                      n_users=30, duration=3600.0, seed=21)


@pytest.fixture(scope="module")
def violation_trace(tmp_path_factory):
    return make_trace(tmp_path_factory, "violation", n_user_urls=50,
                      clicks_per_content_url="const:2", noise_per_click=1.0,
                      underchild_fraction=0.2, param_fraction=0.1,
                      n_users=30, duration=3600.0, seed=22)


class TestParseComposition:
    def test_strict_composition(self):
        config = parse_composition(STRICT)
        assert config.min_children == 2
        assert config.max_params == 0
        assert config.use_type_filter
        assert not config.require_social
        assert not config.use_ad_filter

    def test_case_and_prefix_insensitive(self):
        assert parse_composition("ref+type+children(2)+param(0)") == \
            parse_composition(STRICT)

    def test_referer_alone_disables_everything(self):
        config = parse_composition("F-Ref")
        assert config.min_children == 1
        assert config.max_params is None
        assert not config.use_type_filter

    def test_optional_filters(self):
        config = parse_composition("ref+social+ad+text+params(3)")
        assert config.require_social
        assert config.use_ad_filter
        assert config.require_text_and_title
        assert config.max_params == 3

    def test_unknown_token_rejected(self):
        with pytest.raises(CompositionError):
            parse_composition("ref+cookies")

    def test_missing_referer_base_rejected(self):
        with pytest.raises(CompositionError):
            parse_composition("type+children(2)")


class TestEvalFilters:
    def test_strict_composition_is_exact_on_ideal_trace(self, ideal_trace):
        trace, labels = ideal_trace
        report, = eval_filters(trace, labels, [STRICT])
        assert report.recall == 1.0
        assert report.precision == 1.0
        assert report.false_positives == 0
        assert report.false_negatives == 0
        assert report.true_positives == 40
        assert report.processing_time_ms > 0

    def test_loose_composition_admits_tracker_frames(self, ideal_trace):
        trace, labels = ideal_trace
        report, = eval_filters(trace, labels, [LOOSE])
        assert report.recall == 1.0
        assert report.precision < 1.0
        assert report.false_positives > 0

    def test_violation_trace_reverses_the_tradeoff(self, violation_trace):
        trace, labels = violation_trace
        loose, strict = eval_filters(trace, labels, [LOOSE, STRICT])
        assert loose.recall > strict.recall
        assert loose.precision < strict.precision
        assert strict.recall >= 0.6

    def test_underchilding_lowers_recall_by_its_planted_rate(
            self, tmp_path_factory):
        trace, labels = make_trace(
            tmp_path_factory, "underchild", n_user_urls=50,
            clicks_per_content_url="const:2", underchild_fraction=0.2,
            n_users=30, duration=3600.0, seed=23)
        report, = eval_filters(trace, labels, [STRICT])
        assert report.recall == approx(0.8)
        assert report.precision == 1.0

    def test_narrowing_filters_trade_recall_for_precision(
            self, violation_trace):
        # children/params only discard candidates, so tightening them
        # can never raise recall or lower precision
        trace, labels = violation_trace
        ladder = ["F-Ref", "F-Ref+F-Children(2)",
                  "F-Ref+F-Children(2)+F-Param(0)",
                  "F-Ref+F-Children(3)+F-Param(0)"]
        reports = eval_filters(trace, labels, ladder)
        for wider, narrower in zip(reports, reports[1:]):
            assert narrower.recall <= wider.recall
            assert narrower.precision >= wider.precision

    def test_reports_are_deterministic(self, violation_trace):
        trace, labels = violation_trace
        first, = eval_filters(trace, labels, [STRICT])
        second, = eval_filters(trace, labels, [STRICT])
        assert dataclasses.replace(first, processing_time_ms=0.0) == \
            dataclasses.replace(second, processing_time_ms=0.0)

    def test_empty_trace_reports_zero_counts(self, tmp_path):
        trace = tmp_path / "empty.trace"
        labels = tmp_path / "empty.labels"
        trace.write_text("")
        labels.write_text("")
        report, = eval_filters(str(trace), str(labels), [STRICT])
        assert (report.true_positives, report.false_positives,
                report.false_negatives) == (0, 0, 0)

    def test_labels_outside_trace_rejected(self, ideal_trace, tmp_path):
        trace, labels_path = ideal_trace
        bad = tmp_path / "bad.labels"
        with open(labels_path) as handle:
            body = handle.read()
        bad.write_text(body + "candidate\tnever-seen.example/page\n")
        with pytest.raises(LabelMismatchError):
            eval_filters(trace, str(bad), [STRICT])


def fv(length, flag, freq=1.0, rap=0.5, periodic=0):
    return FeatureVector(url_length=length, hostname_flag=flag,
                         freq_as_hostname=freq, rap_xcorr=rap,
                         periodicity_flag=periodic)


class TestEvalClassifier:
    def test_separable_corpus_scores_perfectly(self):
        samples = [(fv(10 + i % 3, 1), "portal") for i in range(30)]
        samples += [(fv(60 + i % 5, 0), "content") for i in range(30)]
        report, = eval_classifier(samples, [("url_length",)], runs=2)
        assert report.portal_precision == 1.0
        assert report.portal_recall == 1.0
        assert report.content_precision == 1.0
        assert report.content_recall == 1.0
        assert report.accuracy == 1.0

    def test_hostname_alone_halves_portal_recall(self):
        # identical lengths force the decision onto the root-URL flag;
        # the half of portals living on non-root paths all flip
        samples = [(fv(10, 1), "portal") for _ in range(20)]
        samples += [(fv(10, 0), "portal") for _ in range(20)]
        samples += [(fv(10, 0), "content") for _ in range(40)]
        report, = eval_classifier(samples, [("hostname_flag",)], runs=3)
        assert report.content_recall == 1.0
        assert report.portal_recall == approx(0.5)
        assert report.portal_precision == 1.0
        assert report.accuracy == approx(0.75)

    def test_shipped_corpus_reproduces_subset_ordering(self):
        samples = load_corpus(data_file("seed_corpus.tsv"))
        subsets = [("hostname_flag",), ("url_length", "hostname_flag"),
                   ("url_length", "periodicity_flag")]
        hostname, length_hostname, length_periodicity = \
            eval_classifier(samples, subsets, runs=2)
        assert hostname.accuracy < length_hostname.accuracy
        assert length_hostname.accuracy <= length_periodicity.accuracy
        assert length_periodicity.content_recall == 1.0
        assert length_periodicity.accuracy >= 0.9

    def test_too_few_samples_rejected(self):
        samples = [(fv(10, 1), "portal") for _ in range(5)]
        samples += [(fv(60, 0), "content") for _ in range(4)]
        with pytest.raises(InsufficientDataError):
            eval_classifier(samples, [("url_length",)], folds=10)

    def test_same_seed_reproduces_reports(self):
        samples = [(fv(10 + i % 7, 1), "portal") for i in range(25)]
        samples += [(fv(30 + i % 9, 0), "content") for i in range(25)]
        subset = [("url_length",)]
        assert eval_classifier(samples, subset, runs=2, seed=5) == \
            eval_classifier(samples, subset, runs=2, seed=5)


class TestBenchThroughput:
    def test_reports_rate_and_memory(self, ideal_trace):
        trace, _ = ideal_trace
        result = bench_throughput(trace)
        assert result["records"] > 0
        assert result["records_per_second"] > 0
        assert result["requests_per_hour"] == \
            approx(result["records_per_second"] * 3600.0)
        assert result["peak_memory_mb"] > 0


class TestRendering:
    def test_filter_reports_render(self, ideal_trace):
        trace, labels = ideal_trace
        reports = eval_filters(trace, labels, [STRICT, LOOSE])
        tsv = filters_tsv(reports)
        assert tsv.startswith("composition\trecall\t")
        assert len(tsv.strip().split("\n")) == 3
        table = filters_table(reports)
        assert STRICT in table
        assert "-----" in table

    def test_subset_reports_render(self):
        samples = [(fv(10, 1), "portal") for _ in range(20)]
        samples += [(fv(60, 0), "content") for _ in range(20)]
        reports = eval_classifier(samples, [("url_length",)], runs=1)
        assert "url_length" in subsets_tsv(reports)
        assert "accuracy" in subsets_table(reports)
