"""Portal-vs-content classification of candidate URLs.

Five per-URL signals feed a small Naive Bayes model: URL length, the
bare-hostname flag, how often the URL's host roots other candidates,
cross-correlation of the visit arrival process against known portals,
and a 24h-periodicity flag. Shape features are available immediately;
the signal features need observation history, which is why the online
workflow runs two models: an on-the-fly one (length + hostname) for
young URLs and a windowed one (length + periodicity) whose verdicts
are durable enough to cache in the Knowledge Database.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from clickfeed.model import ClickfeedError, ParsedUrl

DAY = 86400.0

CONTENT = "content"
PORTAL = "portal"

CONTINUOUS_FEATURES = ("url_length", "freq_as_hostname", "rap_xcorr")
BINARY_FEATURES = ("hostname_flag", "periodicity_flag")
ALL_FEATURES = ("url_length", "hostname_flag", "freq_as_hostname",
                "rap_xcorr", "periodicity_flag")

VARIANCE_FLOOR = 1e-9

MODEL_FORMAT_VERSION = 1
CORPUS_UNAVAILABLE = "-"


class InsufficientHistoryError(ClickfeedError, ValueError):
    pass


class DegenerateSignalError(ClickfeedError, ValueError):
    pass


class SingleClassDataError(ClickfeedError, ValueError):
    pass


class MissingFeatureError(ClickfeedError, ValueError):
    pass


class UrlProfile:
    """Per-URL observation history: visit counts in fixed-width bins.

    Bins are indexed on a global grid (bin 0 at epoch 0) so profiles of
    different URLs can be aligned for cross-correlation. The vector is
    append-only; late records inside the reordering tolerance are
    credited to the first bin rather than rewriting history.
    """

    __slots__ = ("url", "bin_seconds", "start_bin", "bins", "observations",
                 "freq_as_hostname")

    def __init__(self, url: ParsedUrl, bin_seconds: int) -> None:
        self.url = url
        self.bin_seconds = bin_seconds
        self.start_bin: int | None = None
        self.bins: list[int] = []
        self.observations = 0
        self.freq_as_hostname = 0

    def record(self, timestamp: float) -> None:
        idx = int(timestamp // self.bin_seconds)
        if self.start_bin is None:
            self.start_bin = idx
        offset = max(0, idx - self.start_bin)
        if offset >= len(self.bins):
            self.bins.extend([0] * (offset - len(self.bins) + 1))
        self.bins[offset] += 1
        self.observations += 1

    @property
    def span_seconds(self) -> float:
        return len(self.bins) * self.bin_seconds

    def aligned(self, start_bin: int, length: int) -> np.ndarray:
        """Visit counts resampled onto [start_bin, start_bin + length)."""
        out = np.zeros(length, dtype=float)
        if self.start_bin is None:
            return out
        for i, count in enumerate(self.bins):
            pos = self.start_bin + i - start_bin
            if 0 <= pos < length:
                out[pos] = count
        return out


@dataclass(frozen=True)
class FeatureVector:
    """The five signals; history-dependent ones are None until computable."""

    url_length: int
    hostname_flag: int
    freq_as_hostname: int
    rap_xcorr: float | None
    periodicity_flag: int | None


def periodicity_flag(arrival_bins, bin_seconds: int) -> int:
    """1 iff the dominant nonzero frequency of the arrival process is 1/24h.

    Works on the mean-removed DFT magnitude spectrum; the peak must land
    within one frequency bin of 1/24h, which absorbs the spectral
    leakage of finite non-windowed signals.
    """
    x = np.asarray(arrival_bins, dtype=float)
    if x.size * bin_seconds < 2 * DAY:
        raise InsufficientHistoryError(
            f"need >= 2 days of bins, got {x.size * bin_seconds / DAY:.2f}")
    x = x - x.mean()
    if not np.any(np.abs(x) > 1e-12):
        return 0
    magnitudes = np.abs(np.fft.rfft(x))
    peak = 1 + int(np.argmax(magnitudes[1:]))
    span = x.size * bin_seconds
    freqs = np.arange(magnitudes.size) / span
    target = 1 + int(np.argmin(np.abs(freqs[1:] - 1.0 / DAY)))
    return int(abs(peak - target) <= 1)


def rap_cross_correlation(a, b) -> float:
    """Max over circular lags of the Pearson-normalized cross-correlation.

    Vectors of different lengths are zero-padded at the tail to match.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise DegenerateSignalError("empty arrival vector")
    n = max(a.size, b.size)
    if a.size < n:
        a = np.concatenate([a, np.zeros(n - a.size)])
    if b.size < n:
        b = np.concatenate([b, np.zeros(n - b.size)])
    a0 = a - a.mean()
    b0 = b - b.mean()
    sigma_a = math.sqrt(float(np.dot(a0, a0)) / n)
    sigma_b = math.sqrt(float(np.dot(b0, b0)) / n)
    if sigma_a <= 0 or sigma_b <= 0:
        raise DegenerateSignalError("zero-variance arrival vector")
    spectrum = np.fft.rfft(a0) * np.conj(np.fft.rfft(b0))
    correlation = np.fft.irfft(spectrum, n=n)
    best = float(correlation.max()) / (n * sigma_a * sigma_b)
    return max(-1.0, min(1.0, best))


def extract_features(profile: UrlProfile,
                     reference_portals: list[UrlProfile]) -> FeatureVector:
    """Compute the feature vector for one profiled URL.

    rap_xcorr needs >= 1 day of history plus at least one usable
    reference profile; periodicity needs >= 2 days. Until then those
    fields are None, never a fake zero.
    """
    url = profile.url
    hostname = int(url.path == "/" and not url.query_params)

    rap: float | None = None
    if profile.span_seconds >= DAY and profile.start_bin is not None:
        for reference in reference_portals:
            # a reference with under a day of its own history carries no
            # arrival-pattern signal worth correlating against
            if reference.start_bin is None or reference.span_seconds < DAY:
                continue
            start = min(profile.start_bin, reference.start_bin)
            end = max(profile.start_bin + len(profile.bins),
                      reference.start_bin + len(reference.bins))
            length = end - start
            try:
                value = rap_cross_correlation(profile.aligned(start, length),
                                              reference.aligned(start, length))
            except DegenerateSignalError:
                continue
            rap = value if rap is None else max(rap, value)

    periodicity: int | None = None
    if profile.span_seconds >= 2 * DAY:
        periodicity = periodicity_flag(profile.bins, profile.bin_seconds)

    return FeatureVector(
        url_length=url.length,
        hostname_flag=hostname,
        freq_as_hostname=profile.freq_as_hostname,
        rap_xcorr=rap,
        periodicity_flag=periodicity,
    )


@dataclass(frozen=True)
class NaiveBayesModel:
    feature_subset: tuple[str, ...]
    priors: dict[str, float]
    gaussians: dict[tuple[str, str], tuple[float, float]]  # (feature, class) -> mean, var
    bernoullis: dict[tuple[str, str], float]  # (feature, class) -> rate


def train(labeled, feature_subset) -> NaiveBayesModel:
    """Fit likelihoods per class: Gaussian for continuous features,
    Laplace-smoothed Bernoulli for binary flags, empirical priors.

    Samples missing any subset feature are skipped; training demands
    both classes survive the filtering.
    """
    subset = tuple(feature_subset)
    for name in subset:
        if name not in ALL_FEATURES:
            raise ValueError(f"unknown feature {name!r}")
    usable: dict[str, list[FeatureVector]] = {CONTENT: [], PORTAL: []}
    for fv, label in labeled:
        if label not in usable:
            raise ValueError(f"unknown label {label!r}")
        if any(getattr(fv, name) is None for name in subset):
            continue
        usable[label].append(fv)
    n_content, n_portal = len(usable[CONTENT]), len(usable[PORTAL])
    if n_content == 0 or n_portal == 0:
        raise SingleClassDataError(
            f"need both classes, got content={n_content} portal={n_portal}")
    total = n_content + n_portal
    priors = {CONTENT: n_content / total, PORTAL: n_portal / total}
    gaussians: dict[tuple[str, str], tuple[float, float]] = {}
    bernoullis: dict[tuple[str, str], float] = {}
    for label, rows in usable.items():
        for name in subset:
            values = np.array([float(getattr(fv, name)) for fv in rows])
            if name in BINARY_FEATURES:
                bernoullis[(name, label)] = (float(values.sum()) + 1.0) / (len(values) + 2.0)
            else:
                gaussians[(name, label)] = (
                    float(values.mean()),
                    max(float(values.var()), VARIANCE_FLOOR),
                )
    return NaiveBayesModel(subset, priors, gaussians, bernoullis)


def _log_likelihood(model: NaiveBayesModel, fv: FeatureVector, label: str) -> float:
    total = math.log(model.priors[label])
    for name in model.feature_subset:
        value = getattr(fv, name)
        if value is None:
            raise MissingFeatureError(f"feature {name} unavailable")
        if name in BINARY_FEATURES:
            rate = model.bernoullis[(name, label)]
            total += math.log(rate) if value else math.log(1.0 - rate)
        else:
            mean, var = model.gaussians[(name, label)]
            total += -0.5 * math.log(2.0 * math.pi * var) \
                - (float(value) - mean) ** 2 / (2.0 * var)
    return total


def classify(model: NaiveBayesModel, fv: FeatureVector) -> tuple[str, float]:
    """Argmax-posterior label and its posterior probability.

    Computed in the log domain; at exactly equal posteriors the label
    is content, so no content is ever rejected on a tie.
    """
    log_content = _log_likelihood(model, fv, CONTENT)
    log_portal = _log_likelihood(model, fv, PORTAL)
    peak = max(log_content, log_portal)
    z_content = math.exp(log_content - peak)
    z_portal = math.exp(log_portal - peak)
    posterior_content = z_content / (z_content + z_portal)
    if log_content >= log_portal:
        return CONTENT, posterior_content
    return PORTAL, 1.0 - posterior_content


# ------------------------------------------------------------ persistence

def save_model(model: NaiveBayesModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"format_version={MODEL_FORMAT_VERSION}\n")
        handle.write(f"features={','.join(model.feature_subset)}\n")
        for label in (CONTENT, PORTAL):
            handle.write(f"prior\t{label}\t{model.priors[label]!r}\n")
        for (name, label), (mean, var) in sorted(model.gaussians.items()):
            handle.write(f"gaussian\t{name}\t{label}\t{mean!r}\t{var!r}\n")
        for (name, label), rate in sorted(model.bernoullis.items()):
            handle.write(f"bernoulli\t{name}\t{label}\t{rate!r}\n")


def load_model(path: str) -> NaiveBayesModel:
    priors: dict[str, float] = {}
    gaussians: dict[tuple[str, str], tuple[float, float]] = {}
    bernoullis: dict[tuple[str, str], float] = {}
    subset: tuple[str, ...] = ()
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip()
        if header != f"format_version={MODEL_FORMAT_VERSION}":
            raise ValueError(f"unsupported model file: {header!r}")
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("features="):
                subset = tuple(line.split("=", 1)[1].split(","))
                continue
            parts = line.split("\t")
            if parts[0] == "prior":
                priors[parts[1]] = float(parts[2])
            elif parts[0] == "gaussian":
                gaussians[(parts[1], parts[2])] = (float(parts[3]), float(parts[4]))
            elif parts[0] == "bernoulli":
                bernoullis[(parts[1], parts[2])] = float(parts[3])
    return NaiveBayesModel(subset, priors, gaussians, bernoullis)


@dataclass(frozen=True)
class KnowledgeEntry:
    label: str
    decided_at: float
    classifier_used: str


class KnowledgeDatabase:
    """Durable cache of windowed-classifier verdicts.

    Backed by an append-only log replayed at startup; the in-memory
    table keeps at most one entry per canonical URL (last write wins on
    replay, though the online workflow never rewrites an entry).
    """

    def __init__(self, log_path: str | None = None) -> None:
        self._entries: dict[str, KnowledgeEntry] = {}
        self._log_path = log_path
        self._log_handle = None
        if log_path is not None:
            try:
                with open(log_path, "r", encoding="utf-8") as handle:
                    for line in handle:
                        parts = line.rstrip("\n").split("\t")
                        if len(parts) != 3:
                            continue
                        self._entries[parts[0]] = KnowledgeEntry(
                            parts[1], float(parts[2]), "windowed")
            except FileNotFoundError:
                pass
            self._log_handle = open(log_path, "a", encoding="utf-8")

    def get(self, url_key: str) -> KnowledgeEntry | None:
        return self._entries.get(url_key)

    def put(self, url_key: str, label: str, decided_at: float,
            classifier_used: str = "windowed") -> None:
        self._entries[url_key] = KnowledgeEntry(label, decided_at, classifier_used)
        if self._log_handle is not None:
            self._log_handle.write(f"{url_key}\t{label}\t{decided_at!r}\n")
            self._log_handle.flush()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, url_key: str) -> bool:
        return url_key in self._entries

    def close(self) -> None:
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None


ON_THE_FLY_FEATURES = ("url_length", "hostname_flag")
WINDOWED_FEATURES = ("url_length", "periodicity_flag")


class OnlineClassifier:
    """The streaming decision procedure over candidate events.

    Order of authority: Knowledge Database, then the windowed model
    once a URL has both enough observations and computable periodicity,
    else the on-the-fly model. Only windowed verdicts enter K.
    """

    def __init__(self, on_the_fly: NaiveBayesModel, windowed: NaiveBayesModel,
                 knowledge: KnowledgeDatabase, w_observations: int) -> None:
        self.on_the_fly = on_the_fly
        self.windowed = windowed
        self.knowledge = knowledge
        self.w_observations = w_observations

    def classify_event(self, url: ParsedUrl, profile: UrlProfile,
                       reference_portals: list[UrlProfile],
                       now: float) -> tuple[str, str]:
        """Returns (label, source) with source in {knowledge, windowed, on_the_fly}."""
        key = url.render()
        cached = self.knowledge.get(key)
        if cached is not None:
            return cached.label, "knowledge"
        fv = extract_features(profile, reference_portals)
        if profile.observations >= self.w_observations and \
                fv.periodicity_flag is not None:
            label, _ = classify(self.windowed, fv)
            self.knowledge.put(key, label, now)
            return label, "windowed"
        label, _ = classify(self.on_the_fly, fv)
        return label, "on_the_fly"


# ------------------------------------------------------------ seed corpus

def generate_seed_corpus(seed: int = 0, n_per_class: int = 100):
    """Synthesize a labeled bootstrap corpus with the deployment's shape.

    Portals: mostly short URLs, about a quarter bare-hostname, a small
    long-URL tail (section fronts), strongly periodic, high portal
    cross-correlation. Content: long pathed URLs, burst-driven, never
    periodic. The one-sided length overlap (long portals reach into
    content range, content never reaches down) is what lets length
    models keep perfect content recall while portal recall dips.
    """
    rng = random.Random(seed)
    samples: list[tuple[FeatureVector, str]] = []

    def clipped_gauss(mu, sigma, lo, hi):
        return max(lo, min(hi, rng.gauss(mu, sigma)))

    for _ in range(n_per_class):
        bare = rng.random() < 0.23
        long_tail = not bare and rng.random() < 0.13
        if bare:
            length = clipped_gauss(16, 3, 9, 18)
            freq = rng.randint(3, 45)
        elif long_tail:
            length = clipped_gauss(48, 7, 38, 65)
            freq = 0
        else:
            length = clipped_gauss(25, 5, 14, 34)
            freq = 0
        samples.append((FeatureVector(
            url_length=int(round(length)),
            hostname_flag=int(bare),
            freq_as_hostname=freq,
            rap_xcorr=round(rng.uniform(0.55, 0.97), 4),
            periodicity_flag=int(rng.random() < 0.93),
        ), PORTAL))

    for _ in range(n_per_class):
        length = clipped_gauss(62, 14, 40, 110)
        samples.append((FeatureVector(
            url_length=int(round(length)),
            hostname_flag=0,
            freq_as_hostname=0,
            rap_xcorr=round(rng.uniform(0.02, 0.45), 4),
            periodicity_flag=0,
        ), CONTENT))

    rng.shuffle(samples)
    return samples


def oversample_minority(samples, seed: int = 0):
    """Duplicate random minority-class rows until the classes balance."""
    rng = random.Random(seed)
    by_label: dict[str, list] = {}
    for row in samples:
        by_label.setdefault(row[1], []).append(row)
    if len(by_label) < 2:
        return list(samples)
    sizes = {label: len(rows) for label, rows in by_label.items()}
    majority = max(sizes.values())
    out = list(samples)
    for label, rows in by_label.items():
        deficit = majority - len(rows)
        out.extend(rng.choice(rows) for _ in range(deficit))
    return out


def save_corpus(samples, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# label\turl_length\thostname_flag\tfreq_as_hostname"
                     "\trap_xcorr\tperiodicity_flag\n")
        for fv, label in samples:
            rap = CORPUS_UNAVAILABLE if fv.rap_xcorr is None else repr(fv.rap_xcorr)
            per = CORPUS_UNAVAILABLE if fv.periodicity_flag is None else fv.periodicity_flag
            handle.write(f"{label}\t{fv.url_length}\t{fv.hostname_flag}"
                         f"\t{fv.freq_as_hostname}\t{rap}\t{per}\n")


def load_corpus(path: str):
    samples: list[tuple[FeatureVector, str]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            label, length, hostname, freq, rap, per = line.split("\t")
            samples.append((FeatureVector(
                url_length=int(length),
                hostname_flag=int(hostname),
                freq_as_hostname=int(freq),
                rap_xcorr=None if rap == CORPUS_UNAVAILABLE else float(rap),
                periodicity_flag=None if per == CORPUS_UNAVAILABLE else int(per),
            ), label))
    return samples
