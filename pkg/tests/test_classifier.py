"""Portal/content classifier: features, numerics, model, online workflow."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import clickfeed.classifier as clf
from clickfeed.classifier import (
    CONTENT,
    PORTAL,
    DegenerateSignalError,
    FeatureVector,
    InsufficientHistoryError,
    KnowledgeDatabase,
    MissingFeatureError,
    NaiveBayesModel,
    OnlineClassifier,
    SingleClassDataError,
    UrlProfile,
    classify,
    extract_features,
    generate_seed_corpus,
    load_corpus,
    load_model,
    oversample_minority,
    periodicity_flag,
    rap_cross_correlation,
    save_corpus,
    save_model,
    train,
)
from clickfeed.model import canonicalize_url
from clickfeed.patterns import data_file

DAY = 86400.0


def make_profile(url, timestamps, bin_seconds=300):
    profile = UrlProfile(canonicalize_url(url), bin_seconds)
    for ts in timestamps:
        profile.record(ts)
    return profile


def sinusoid_times(period, days, per_day=200, seed=0):
    """Arrival times whose rate peaks once per `period` seconds."""
    rng = random.Random(seed)
    total = days * DAY
    times = [0.25, total - 0.5]  # pin the span to the full window
    while len(times) < per_day * days:
        t = rng.uniform(0, total)
        accept = 0.05 + 0.95 * max(0.0, math.sin(2 * math.pi * (t % period) / period))
        if rng.random() < accept:
            times.append(t)
    return sorted(times)


# ------------------------------------------------------------ profiles

class TestUrlProfile:
    def test_binning_and_gap_fill(self):
        p = make_profile("a.example/", [0.0, 10.0, 650.0, 1900.0])
        assert p.bins == [2, 0, 1, 0, 0, 0, 1]
        assert p.observations == 4
        assert p.span_seconds == 7 * 300

    def test_late_record_clamps_to_first_bin(self):
        p = make_profile("a.example/", [600.0, 10.0])
        assert p.bins == [2]
        assert p.observations == 2

    def test_aligned_places_counts_on_global_grid(self):
        p = make_profile("a.example/", [600.0, 900.0, 900.0])
        assert list(p.aligned(0, 6)) == [0, 0, 1, 2, 0, 0]
        assert list(p.aligned(2, 2)) == [1, 2]
        empty = UrlProfile(canonicalize_url("b.example/"), 300)
        assert list(empty.aligned(0, 3)) == [0, 0, 0]


# ------------------------------------------------------------ periodicity

class TestPeriodicityFlag:
    def test_daily_periodic_flagged(self):
        bins = make_profile("p.example/", sinusoid_times(DAY, 7)).bins
        assert periodicity_flag(bins, 300) == 1

    def test_white_noise_not_flagged(self):
        rng = random.Random(3)
        bins = [rng.randint(0, 5) for _ in range(int(7 * DAY // 300))]
        assert periodicity_flag(bins, 300) == 0

    def test_six_hour_period_not_flagged(self):
        bins = make_profile("p.example/", sinusoid_times(DAY / 4, 7)).bins
        assert periodicity_flag(bins, 300) == 0

    def test_constant_vector_not_flagged(self):
        assert periodicity_flag([4] * int(2 * DAY // 300), 300) == 0
        assert periodicity_flag([0] * int(2 * DAY // 300), 300) == 0

    def test_under_two_days_rejected(self):
        bins = [1] * (int(2 * DAY // 300) - 1)
        with pytest.raises(InsufficientHistoryError):
            periodicity_flag(bins, 300)

    @given(scale=st.floats(min_value=1e-3, max_value=1e3),
           seed=st.integers(min_value=0, max_value=50))
    @settings(max_examples=25, deadline=None)
    def test_amplitude_invariance(self, scale, seed):
        rng = random.Random(seed)
        bins = np.array([rng.randint(0, 6) for _ in range(48)], dtype=float)
        if np.allclose(bins.var(), 0):
            return
        assert periodicity_flag(bins, 3600) == periodicity_flag(bins * scale, 3600)

    def test_peak_bin_matches_direct_dft(self):
        # independent O(N^2) DFT confirms the fft-derived peak location
        bins = np.array(make_profile("p.example/", sinusoid_times(DAY, 3)).bins,
                        dtype=float)
        x = bins - bins.mean()
        n = x.size
        k = np.arange(n // 2 + 1)
        dft = np.exp(-2j * np.pi * np.outer(k, np.arange(n)) / n) @ x
        direct_peak = 1 + int(np.argmax(np.abs(dft[1:])))
        fft_peak = 1 + int(np.argmax(np.abs(np.fft.rfft(x))[1:]))
        assert direct_peak == fft_peak
        target = int(round(n * 300 / DAY))
        assert abs(fft_peak - target) <= 1


# ------------------------------------------------------------ rap xcorr

def brute_force_rap(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = max(a.size, b.size)
    a = np.concatenate([a, np.zeros(n - a.size)])
    b = np.concatenate([b, np.zeros(n - b.size)])
    a0, b0 = a - a.mean(), b - b.mean()
    sa = math.sqrt(float(np.dot(a0, a0)) / n)
    sb = math.sqrt(float(np.dot(b0, b0)) / n)
    best = max(float(np.dot(np.roll(a0, -lag), b0)) for lag in range(n))
    return max(-1.0, min(1.0, best / (n * sa * sb)))


class TestRapCrossCorrelation:
    def test_identical_vectors(self):
        v = [1.0, 4.0, 2.0, 8.0, 0.0]
        assert rap_cross_correlation(v, v) == pytest.approx(1.0)

    def test_circular_shift_recovers_unity(self):
        base = np.array([0, 1, 5, 2, 7, 1, 0, 3], dtype=float)
        assert rap_cross_correlation(np.roll(base, 3), base) == pytest.approx(1.0)

    def test_half_period_shifted_sinusoid(self):
        t = np.arange(48)
        a = np.sin(2 * np.pi * t / 24)
        b = np.sin(2 * np.pi * (t + 12) / 24)
        assert rap_cross_correlation(a, b) == pytest.approx(1.0)

    def test_unequal_lengths_zero_padded(self):
        a = [1.0, 2.0, 3.0]
        b = [1.0, 2.0, 3.0, 0.0, 0.0]
        assert rap_cross_correlation(a, b) == pytest.approx(1.0)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(DegenerateSignalError):
            rap_cross_correlation([2.0, 2.0, 2.0], [1.0, 5.0, 3.0])
        with pytest.raises(DegenerateSignalError):
            rap_cross_correlation([], [1.0])

    @given(seed=st.integers(min_value=0, max_value=500))
    @settings(max_examples=60, deadline=None)
    def test_matches_brute_force_lag_sweep(self, seed):
        rng = random.Random(seed)
        a = [rng.randint(0, 9) for _ in range(rng.randint(2, 30))]
        b = [rng.randint(0, 9) for _ in range(rng.randint(2, 30))]
        n = max(len(a), len(b))
        av = np.concatenate([a, np.zeros(n - len(a))])
        bv = np.concatenate([b, np.zeros(n - len(b))])
        if np.allclose(av.var(), 0) or np.allclose(bv.var(), 0):
            return
        got = rap_cross_correlation(a, b)
        assert got == pytest.approx(brute_force_rap(a, b), abs=1e-9)
        assert -1.0 <= got <= 1.0
        assert rap_cross_correlation(b, a) == pytest.approx(got, abs=1e-9)


# ------------------------------------------------------------ features

class TestExtractFeatures:
    def test_shape_features_immediate(self):
        p = make_profile("repubblica.it/", [0.0])
        p.freq_as_hostname = 7
        fv = extract_features(p, [])
        assert fv.url_length == len("repubblica.it/")
        assert fv.hostname_flag == 1
        assert fv.freq_as_hostname == 7
        assert fv.rap_xcorr is None
        assert fv.periodicity_flag is None

    def test_hostname_flag_requires_bare_root(self):
        assert extract_features(make_profile("a.it/news", [0.0]), []).hostname_flag == 0
        assert extract_features(make_profile("a.it/?x=1", [0.0]), []).hostname_flag == 0

    def test_rap_needs_one_day_and_reference(self):
        ref = make_profile("portal.example/", sinusoid_times(DAY, 3, seed=1))
        young = make_profile("x.example/p", [0.0, 600.0])
        assert extract_features(young, [ref]).rap_xcorr is None

        mature = make_profile("x.example/p", sinusoid_times(DAY, 1, seed=2))
        assert extract_features(mature, []).rap_xcorr is None
        fv = extract_features(mature, [ref])
        assert fv.rap_xcorr is not None
        assert -1.0 <= fv.rap_xcorr <= 1.0
        assert fv.periodicity_flag is None  # one day only

    def test_rap_is_maximum_over_references(self):
        times = sinusoid_times(DAY, 2, seed=4)
        target = make_profile("x.example/p", times)
        twin = make_profile("portal.example/", times)
        unrelated = make_profile("other.example/", sinusoid_times(DAY / 4, 2, seed=5))
        alone = extract_features(target, [unrelated]).rap_xcorr
        both = extract_features(target, [unrelated, twin]).rap_xcorr
        assert both == pytest.approx(1.0)
        assert both >= alone

    def test_degenerate_reference_skipped(self):
        flat = make_profile("portal.example/", [0.0])  # single bin, zero variance
        mature = make_profile("x.example/p", sinusoid_times(DAY, 2, seed=6))
        assert extract_features(mature, [flat]).rap_xcorr is None

    def test_two_days_enables_periodicity(self):
        p = make_profile("portal.example/", sinusoid_times(DAY, 2, seed=7))
        fv = extract_features(p, [])
        assert fv.periodicity_flag == 1


# ------------------------------------------------------------ naive bayes

def separable_samples():
    rows = []
    for i in range(20):
        rows.append((FeatureVector(10, 1, 0, None, None), PORTAL))
        rows.append((FeatureVector(100, 0, 0, None, None), CONTENT))
    return rows


class TestNaiveBayes:
    def test_separable_lengths_classified_perfectly(self):
        model = train(separable_samples(), ("url_length",))
        assert classify(model, FeatureVector(12, 0, 0, None, None))[0] == PORTAL
        assert classify(model, FeatureVector(95, 0, 0, None, None))[0] == CONTENT

    def test_balanced_priors(self):
        model = train(separable_samples(), ("url_length",))
        assert model.priors[CONTENT] == pytest.approx(0.5)
        assert model.priors[PORTAL] == pytest.approx(0.5)

    def test_single_class_rejected(self):
        rows = [(FeatureVector(10, 1, 0, None, None), PORTAL)] * 5
        with pytest.raises(SingleClassDataError):
            train(rows, ("url_length",))

    def test_samples_missing_subset_features_skipped(self):
        rows = separable_samples()
        # periodicity unavailable everywhere -> nothing trainable
        with pytest.raises(SingleClassDataError):
            train(rows, ("periodicity_flag",))

    def test_unknown_feature_and_label_rejected(self):
        with pytest.raises(ValueError):
            train(separable_samples(), ("entropy",))
        with pytest.raises(ValueError):
            train([(FeatureVector(10, 1, 0, None, None), "spam")], ("url_length",))

    def test_laplace_smoothing_keeps_rates_interior(self):
        model = train(separable_samples(), ("hostname_flag",))
        rate = model.bernoullis[("hostname_flag", PORTAL)]
        assert 0.0 < rate < 1.0
        assert model.bernoullis[("hostname_flag", CONTENT)] > 0.0

    def test_exact_tie_resolves_to_content(self):
        model = NaiveBayesModel(
            feature_subset=("hostname_flag",),
            priors={CONTENT: 0.5, PORTAL: 0.5},
            gaussians={},
            bernoullis={("hostname_flag", CONTENT): 0.5,
                        ("hostname_flag", PORTAL): 0.5},
        )
        label, posterior = classify(model, FeatureVector(30, 1, 0, None, None))
        assert label == CONTENT
        assert posterior == pytest.approx(0.5)

    def test_missing_feature_rejected(self):
        model = train(separable_samples(), ("url_length",))
        model = NaiveBayesModel(("url_length", "periodicity_flag"), model.priors,
                                model.gaussians,
                                {("periodicity_flag", CONTENT): 0.5,
                                 ("periodicity_flag", PORTAL): 0.5})
        with pytest.raises(MissingFeatureError):
            classify(model, FeatureVector(40, 0, 0, None, None))

    def test_posterior_matches_high_precision_oracle(self):
        import mpmath
        model = NaiveBayesModel(
            feature_subset=("url_length",),
            priors={CONTENT: 0.5, PORTAL: 0.5},
            gaussians={("url_length", CONTENT): (60.0, 100.0),
                       ("url_length", PORTAL): (20.0, 50.0)},
            bernoullis={},
        )
        mpmath.mp.dps = 50

        def pdf(x, mean, var):
            return mpmath.exp(-(x - mean) ** 2 / (2 * var)) / mpmath.sqrt(
                2 * mpmath.pi * var)

        x = 40
        lc = pdf(x, 60, 100) * mpmath.mpf("0.5")
        lp = pdf(x, 20, 50) * mpmath.mpf("0.5")
        expected_content = lc / (lc + lp)
        label, posterior = classify(model, FeatureVector(x, 0, 0, None, None))
        expected = expected_content if label == CONTENT else 1 - expected_content
        assert posterior == pytest.approx(float(expected), rel=1e-12)

    def test_extreme_values_stay_finite(self):
        model = train(separable_samples(), ("url_length",))
        label, posterior = classify(model, FeatureVector(10 ** 6, 0, 0, None, None))
        assert label in (CONTENT, PORTAL)
        assert 0.0 <= posterior <= 1.0
        assert math.isfinite(posterior)

    @given(shift=st.integers(min_value=-30, max_value=30))
    @settings(max_examples=30, deadline=None)
    def test_decision_stable_under_retrain_reordering(self, shift):
        # shuffling training rows must not change fitted decisions
        rows = generate_seed_corpus(seed=5, n_per_class=40)
        reordered = rows[shift:] + rows[:shift]
        m1 = train(rows, ("url_length", "hostname_flag"))
        m2 = train(reordered, ("url_length", "hostname_flag"))
        probe = FeatureVector(37, 0, 0, None, 0)
        assert classify(m1, probe)[0] == classify(m2, probe)[0]
        assert classify(m1, probe)[1] == pytest.approx(classify(m2, probe)[1])


# ------------------------------------------------------------ persistence

class TestModelPersistence:
    def test_roundtrip_preserves_decisions(self, tmp_path):
        model = train(generate_seed_corpus(seed=1, n_per_class=50),
                      ("url_length", "hostname_flag", "periodicity_flag"))
        path = str(tmp_path / "model.txt")
        save_model(model, path)
        back = load_model(path)
        assert back.feature_subset == model.feature_subset
        assert back.priors == pytest.approx(model.priors)
        for key, (mean, var) in model.gaussians.items():
            assert back.gaussians[key] == pytest.approx((mean, var))
        for key, rate in model.bernoullis.items():
            assert back.bernoullis[key] == pytest.approx(rate)

    def test_file_is_human_readable_and_versioned(self, tmp_path):
        model = train(separable_samples(), ("url_length",))
        path = str(tmp_path / "model.txt")
        save_model(model, path)
        text = open(path).read()
        assert text.startswith("format_version=1\n")
        assert "gaussian\turl_length\tcontent" in text

    def test_unsupported_version_rejected(self, tmp_path):
        path = str(tmp_path / "model.txt")
        path_obj = tmp_path / "model.txt"
        path_obj.write_text("format_version=99\n")
        with pytest.raises(ValueError):
            load_model(path)


class TestKnowledgeDatabase:
    def test_put_get_contains(self):
        k = KnowledgeDatabase()
        assert k.get("a.example/") is None
        k.put("a.example/", PORTAL, 100.0)
        entry = k.get("a.example/")
        assert entry.label == PORTAL
        assert entry.decided_at == 100.0
        assert "a.example/" in k
        assert len(k) == 1

    def test_log_replayed_on_reopen(self, tmp_path):
        path = str(tmp_path / "knowledge.log")
        k = KnowledgeDatabase(path)
        k.put("a.example/", PORTAL, 100.0)
        k.put("b.example/story", CONTENT, 200.0)
        k.close()

        again = KnowledgeDatabase(path)
        assert len(again) == 2
        assert again.get("a.example/").label == PORTAL
        assert again.get("b.example/story").decided_at == 200.0
        again.close()

    def test_appends_survive_multiple_sessions(self, tmp_path):
        path = str(tmp_path / "knowledge.log")
        first = KnowledgeDatabase(path)
        first.put("a.example/", PORTAL, 1.0)
        first.close()
        second = KnowledgeDatabase(path)
        second.put("c.example/x", CONTENT, 2.0)
        second.close()
        third = KnowledgeDatabase(path)
        assert len(third) == 2
        third.close()

    def test_malformed_log_lines_skipped(self, tmp_path):
        path = tmp_path / "knowledge.log"
        path.write_text("a.example/\tportal\t1.0\nnot a record\n")
        k = KnowledgeDatabase(str(path))
        assert len(k) == 1
        k.close()


# ------------------------------------------------------------ online flow

def online_setup(tmp_path=None):
    corpus = generate_seed_corpus(seed=2, n_per_class=100)
    on_the_fly = train(corpus, clf.ON_THE_FLY_FEATURES)
    windowed = train(corpus, clf.WINDOWED_FEATURES)
    log = None if tmp_path is None else str(tmp_path / "knowledge.log")
    return OnlineClassifier(on_the_fly, windowed, KnowledgeDatabase(log), 10)


class TestOnlineClassifier:
    def test_knowledge_hit_consults_no_model(self, monkeypatch):
        oc = online_setup()
        url = canonicalize_url("portal.example/")
        oc.knowledge.put(url.render(), PORTAL, 50.0)
        calls = []
        monkeypatch.setattr(clf, "classify",
                            lambda *a, **k: calls.append(1) or (CONTENT, 1.0))
        label, source = oc.classify_event(url, make_profile("portal.example/", [0.0]),
                                          [], 60.0)
        assert (label, source) == (PORTAL, "knowledge")
        assert calls == []

    def test_young_url_uses_on_the_fly_and_skips_knowledge(self):
        oc = online_setup()
        url = canonicalize_url("shortp.example/")
        profile = make_profile("shortp.example/", [0.0, 300.0])
        label, source = oc.classify_event(url, profile, [], 400.0)
        assert source == "on_the_fly"
        assert label == PORTAL  # short bare hostname
        assert len(oc.knowledge) == 0

    def test_long_pathed_url_on_the_fly_content(self):
        oc = online_setup()
        url = canonicalize_url(
            "site001.example/story/some-long-article-title-here-001.html")
        profile = make_profile(str(url), [0.0])
        label, source = oc.classify_event(url, profile, [], 10.0)
        assert (label, source) == (CONTENT, "on_the_fly")

    def test_mature_periodic_url_goes_windowed_and_caches(self):
        oc = online_setup()
        url = canonicalize_url("portal.example/")
        profile = make_profile("portal.example/", sinusoid_times(DAY, 3, seed=9))
        assert profile.observations >= oc.w_observations
        label, source = oc.classify_event(url, profile, [], 3 * DAY)
        assert (label, source) == (PORTAL, "windowed")
        assert oc.knowledge.get(url.render()).label == PORTAL

        # second sighting is served from the cache
        label2, source2 = oc.classify_event(url, profile, [], 3 * DAY + 1)
        assert (label2, source2) == (PORTAL, "knowledge")

    def test_windowed_needs_observation_count_not_just_span(self):
        oc = online_setup()
        url = canonicalize_url("sparse.example/")
        # long span but too few sightings
        profile = make_profile("sparse.example/",
                               [i * DAY / 3 for i in range(7)])
        assert profile.span_seconds >= 2 * DAY
        assert profile.observations < oc.w_observations
        _, source = oc.classify_event(url, profile, [], 3 * DAY)
        assert source == "on_the_fly"
        assert len(oc.knowledge) == 0

    def test_on_the_fly_never_writes_knowledge(self):
        oc = online_setup()
        for i in range(50):
            url = canonicalize_url(f"site{i:03d}.example/a/b-{i}.html")
            profile = make_profile(str(url), [float(i)])
            oc.classify_event(url, profile, [], 100.0)
        assert len(oc.knowledge) == 0

    def test_warm_cache_improves_content_precision(self):
        """Maturity fixes the on-the-fly model's long-URL portal mistakes."""
        oc = online_setup()
        # section fronts: long pathed portal URLs the shape model misreads
        portals = [canonicalize_url(
            f"portal{i}.example/section/front-page-politics-{i:02d}.html")
            for i in range(6)]
        contents = [canonicalize_url(
            f"site{i:03d}.example/story/some-breaking-news-piece-{i:03d}.html")
            for i in range(6)]
        truth = {u.render(): PORTAL for u in portals}
        truth.update({u.render(): CONTENT for u in contents})

        profiles = {}
        for i, u in enumerate(portals):
            profiles[u.render()] = make_profile(str(u),
                                                sinusoid_times(DAY, 3, seed=20 + i))
        for i, u in enumerate(contents):
            rng = random.Random(40 + i)
            profiles[u.render()] = make_profile(
                str(u), sorted(rng.uniform(0, 600) for _ in range(30)))

        def content_precision(phase_profiles):
            decided_content = correct_content = 0
            for u in portals + contents:
                label, _ = oc.classify_event(u, phase_profiles[u.render()], [],
                                             4 * DAY)
                if label == CONTENT:
                    decided_content += 1
                    correct_content += truth[u.render()] == CONTENT
            return correct_content / decided_content

        young = {key: make_profile(key, [0.0]) for key in profiles}
        before = content_precision(young)
        after = content_precision(profiles)
        assert before < 1.0
        assert after == pytest.approx(1.0)
        assert after > before


# ------------------------------------------------------------ seed corpus

class TestSeedCorpus:
    def test_shipped_corpus_matches_generator(self):
        shipped = load_corpus(data_file("seed_corpus.tsv"))
        assert shipped == generate_seed_corpus(seed=0, n_per_class=100)

    def test_class_balance_and_shapes(self):
        rows = load_corpus(data_file("seed_corpus.tsv"))
        assert len(rows) == 200
        portals = [fv for fv, lab in rows if lab == PORTAL]
        contents = [fv for fv, lab in rows if lab == CONTENT]
        assert len(portals) == len(contents) == 100
        assert all(fv.url_length >= 40 for fv in contents)
        assert all(fv.hostname_flag == 0 for fv in contents)
        assert all(fv.periodicity_flag == 0 for fv in contents)
        assert any(fv.hostname_flag == 1 for fv in portals)
        assert any(fv.url_length >= 40 for fv in portals)

    def test_corpus_roundtrip_with_unavailable_fields(self, tmp_path):
        rows = [(FeatureVector(30, 1, 4, None, None), PORTAL),
                (FeatureVector(55, 0, 0, 0.12, 0), CONTENT)]
        path = str(tmp_path / "corpus.tsv")
        save_corpus(rows, path)
        assert load_corpus(path) == rows

    def test_quick_cv_sanity(self):
        rows = load_corpus(data_file("seed_corpus.tsv"))
        rng = random.Random(0)
        rng.shuffle(rows)
        held = rows[:40]
        model = train(rows[40:], ("url_length", "periodicity_flag"))
        accuracy = sum(classify(model, fv)[0] == label
                       for fv, label in held) / len(held)
        assert accuracy >= 0.85

    def test_oversample_balances_classes(self):
        rows = [(FeatureVector(10, 1, 0, None, None), PORTAL)] * 3 + \
               [(FeatureVector(90, 0, 0, None, None), CONTENT)] * 10
        balanced = oversample_minority(rows, seed=1)
        counts = {PORTAL: 0, CONTENT: 0}
        for _, label in balanced:
            counts[label] += 1
        assert counts[PORTAL] == counts[CONTENT] == 10

    def test_oversample_noop_when_balanced(self):
        rows = separable_samples()
        assert len(oversample_minority(rows)) == len(rows)
