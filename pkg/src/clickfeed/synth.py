"""Synthetic labeled trace generation.

The generator builds a fully-controlled browsing population: portal
front pages clicked on a diurnal rhythm, content pages clicked in
bursts, every click followed by its embedded-object children. Because
the generator knows which URLs are true clicks, it emits a sidecar
label file the evaluation harness treats as ground truth. Knobs exist
to plant filter violations (under-childed clicks, parameterized URLs)
and tracker-style noise chains, which is how the recall/precision
trade-off of the filter compositions is exercised at desk scale.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, field

from clickfeed.ingest import write_trace
from clickfeed.model import ClickfeedError, HttpRequestRecord

DAY = 86400.0

BROWSER_AGENT = "Mozilla/5.0 (X11; Linux x86_64; rv:38.0) Gecko/20100101 Firefox/38.0"

SOCIAL_CHILD = "facebook.com/plugins/like.php?href={page}"

_WORDS = [
    "harbor", "signal", "market", "garden", "railway", "council", "museum",
    "festival", "weather", "stadium", "library", "bridge", "quarter",
    "station", "orchestra", "derby", "summit", "election", "transit",
    "housing", "academy", "research", "startup", "cinema", "exhibit",
    "marathon", "harvest", "voyage", "protest", "budget", "tunnel",
    "airport", "lagoon", "piazza", "castle", "carnival", "register",
    "network", "quarterly", "frontier", "random", "meridian", "analog",
    "cascade", "ledger", "compass", "granite", "island", "monsoon",
    "pioneer", "quartz", "ribbon", "saffron", "timber", "uptown",
    "velvet", "willow", "zephyr", "atlas", "beacon", "candle",
]


class InvalidSpecError(ClickfeedError, ValueError):
    """Raised when a SyntheticTraceSpec cannot produce a trace."""


def parse_distribution(text: str):
    """Parse a draw spec like const:5 or uniform:2,9 into rng -> int."""
    kind, _, args = text.partition(":")
    if kind == "const":
        value = int(args)
        return lambda rng: value
    if kind == "uniform":
        lo_text, _, hi_text = args.partition(",")
        lo, hi = int(lo_text), int(hi_text)
        if hi < lo:
            raise InvalidSpecError(f"uniform bounds reversed: {text!r}")
        return lambda rng: rng.randint(lo, hi)
    raise InvalidSpecError(f"unknown distribution {text!r}")


@dataclass
class SyntheticTraceSpec:
    """Parameters of one synthetic browsing population.

    The first seven fields describe the population itself; the rest are
    planted-violation and noise knobs used by the evaluation suites.
    All defaults are chosen so the smallest spec stays exactly
    countable: n clicks, each followed by its children, nothing else.
    """

    n_user_urls: int = 10
    children_per_click: str = "const:5"
    social_fraction: float = 1.0
    portal_fraction: float = 0.0
    n_users: int = 20
    duration: float = 3600.0
    seed: int = 0

    clicks_per_content_url: str = "const:1"
    portal_clicks: str = "const:48"
    underchild_fraction: float = 0.0
    param_fraction: float = 0.0
    noise_per_click: float = 0.0
    noise_param_fraction: float = 0.5
    start_epoch: float = 1000000.0

    def __post_init__(self) -> None:
        if self.n_users <= 0:
            raise InvalidSpecError("n_users must be positive")
        if self.duration <= 0:
            raise InvalidSpecError("duration must be positive")
        if self.n_user_urls < 0:
            raise InvalidSpecError("n_user_urls must be >= 0")
        for name in ("social_fraction", "portal_fraction", "underchild_fraction",
                     "param_fraction", "noise_param_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidSpecError(f"{name} must be in [0, 1]")
        if self.noise_per_click < 0:
            raise InvalidSpecError("noise_per_click must be >= 0")


@dataclass
class TraceLabels:
    """Ground-truth URL sets, keyed by canonical rendering."""

    user: set[str] = field(default_factory=set)
    candidate: set[str] = field(default_factory=set)
    portal: set[str] = field(default_factory=set)
    content: set[str] = field(default_factory=set)

    def lines(self) -> list[str]:
        out = []
        for label in ("user", "candidate", "portal", "content"):
            for url in sorted(getattr(self, label)):
                out.append(f"{label}\t{url}")
        return out


def _slug(rng: random.Random, n_words: int) -> str:
    return "-".join(rng.choice(_WORDS) for _ in range(n_words))


def _periodic_times(rng: random.Random, count: int, duration: float,
                    start: float) -> list[float]:
    """Rejection-sample arrivals from a rectified 24h sinusoid plus a noise floor."""
    times = []
    while len(times) < count:
        t = rng.uniform(0.0, duration)
        intensity = max(0.0, math.sin(2.0 * math.pi * (t % DAY) / DAY))
        if rng.random() < 0.05 + 0.95 * intensity:
            times.append(start + t)
    return times


def _burst_times(rng: random.Random, count: int, duration: float,
                 start: float) -> list[float]:
    t = rng.uniform(0.0, 0.7 * duration)
    times = []
    for _ in range(count):
        times.append(start + min(t, duration))
        t += rng.expovariate(1.0 / 180.0)
    return times


def generate_records(spec: SyntheticTraceSpec) -> tuple[list[HttpRequestRecord], TraceLabels]:
    """Build the request records and ground-truth labels for a spec.

    Deterministic given spec.seed: same spec, same bytes.
    """
    rng = random.Random(spec.seed)
    users = [f"u{i:04d}" for i in range(spec.n_users)]
    labels = TraceLabels()

    n_portals = int(round(spec.portal_fraction * spec.n_user_urls))
    n_content = spec.n_user_urls - n_portals

    portal_hosts = [f"portal{i}.example" for i in range(n_portals)]
    portal_urls = [host + "/" for host in portal_hosts]

    content_urls = []
    content_referers = []
    for j in range(n_content):
        if portal_hosts:
            host = portal_hosts[j % n_portals]
            referer = portal_urls[j % n_portals]
        else:
            host = f"site{j:03d}.example"
            referer = None
        url = f"{host}/story/{_slug(rng, 4)}-{j:03d}.html"
        content_urls.append(url)
        content_referers.append(referer)

    user_urls = portal_urls + content_urls
    labels.user.update(user_urls)

    # Per-URL plantings, drawn as index subsets so seeds stay comparable.
    n_social = int(round(spec.social_fraction * len(user_urls)))
    social_set = set(rng.sample(range(len(user_urls)), n_social))
    underchild_set = set(rng.sample(range(n_portals, len(user_urls)),
                                    int(round(spec.underchild_fraction * n_content))))
    param_set = set(rng.sample(range(n_portals, len(user_urls)),
                               int(round(spec.param_fraction * n_content))))

    final_urls = list(user_urls)
    for idx in param_set:
        final_urls[idx] = user_urls[idx] + "?ref=hp"
    labels.user = set(final_urls)
    for idx in social_set:
        labels.candidate.add(final_urls[idx])
        if idx < n_portals:
            labels.portal.add(final_urls[idx])
        else:
            labels.content.add(final_urls[idx])

    children_draw = parse_distribution(spec.children_per_click)
    content_clicks_draw = parse_distribution(spec.clicks_per_content_url)
    portal_clicks_draw = parse_distribution(spec.portal_clicks)

    records: list[HttpRequestRecord] = []
    noise_serial = 0

    def emit_click(t: float, idx: int, referer: str | None) -> None:
        nonlocal noise_serial
        url = final_urls[idx]
        user = rng.choice(users)
        records.append(HttpRequestRecord(t, user, url, referer, BROWSER_AGENT))
        n_children = 1 if idx in underchild_set else max(0, children_draw(rng))
        child_host = f"static.{user_urls[idx].split('/', 1)[0]}"
        social_slot = rng.randrange(n_children) if idx in social_set and n_children else -1
        for c in range(n_children):
            ct = t + rng.uniform(0.05, 2.0)
            if c == social_slot:
                child = SOCIAL_CHILD.format(page=url.replace("/", "%2F"))
            else:
                kind = ("i{}.png", "s{}.css", "j{}.js")[c % 3]
                child = f"{child_host}/{kind.format(c)}"
            records.append(HttpRequestRecord(ct, user, child, url, BROWSER_AGENT))
        whole, frac = divmod(spec.noise_per_click, 1.0)
        n_noise = int(whole) + (1 if rng.random() < frac else 0)
        for _ in range(n_noise):
            noise_ref = f"trk{noise_serial}.tracker.example/frame/{noise_serial}"
            if rng.random() < spec.noise_param_fraction:
                noise_ref += f"?sid={noise_serial}"
            beacon = f"beacon.tracker.example/b{noise_serial}.gif"
            nt = t + rng.uniform(0.05, 2.0)
            records.append(HttpRequestRecord(nt, user, beacon, noise_ref, BROWSER_AGENT))
            noise_serial += 1

    for i in range(n_portals):
        for t in _periodic_times(rng, portal_clicks_draw(rng), spec.duration,
                                 spec.start_epoch):
            emit_click(t, i, None)
    for j in range(n_content):
        idx = n_portals + j
        for t in _burst_times(rng, content_clicks_draw(rng), spec.duration,
                              spec.start_epoch):
            emit_click(t, idx, content_referers[j])

    records.sort(key=lambda r: r.timestamp)
    return records, labels


def generate_synthetic(spec: SyntheticTraceSpec, out_dir: str) -> tuple[str, str]:
    """Write trace.tsv and labels.tsv under out_dir; returns both paths."""
    records, labels = generate_records(spec)
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace.tsv")
    label_path = os.path.join(out_dir, "labels.tsv")
    write_trace(records, trace_path)
    with open(label_path, "w", encoding="utf-8") as handle:
        for line in labels.lines():
            handle.write(line + "\n")
    return trace_path, label_path


def load_labels(path: str) -> TraceLabels:
    labels = TraceLabels()
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            label, _, url = line.partition("\t")
            getattr(labels, label).add(url)
    return labels


def load_spec(path: str) -> SyntheticTraceSpec:
    """Parse a flat key=value spec file (same format as the engine config)."""
    import dataclasses

    fields = {f.name: f for f in dataclasses.fields(SyntheticTraceSpec)}
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidSpecError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in fields:
                raise InvalidSpecError(f"{path}:{lineno}: unknown key {key!r}")
            kind = fields[key].type
            value = value.strip()
            try:
                if kind == "int":
                    values[key] = int(value)
                elif kind == "float":
                    values[key] = float(value)
                else:
                    values[key] = value
            except ValueError as exc:
                raise InvalidSpecError(f"{path}:{lineno}: bad value for {key}") from exc
    return SyntheticTraceSpec(**values)


# ------------------------------------------------------------ populations

@dataclass(frozen=True)
class PopulationSpec:
    """Synthetic browsing population over one content catalog.

    Populations sharing a catalog_id browse the same pages under the
    same popularity law; distinct catalog_ids get unrelated pages and
    keyword assignments.
    """

    catalog_id: str = "city-a"
    n_pages: int = 150
    n_users: int = 60
    views_per_user: int = 80
    keywords_per_page: int = 8
    vocab_size: int = 250
    zipf_exponent: float = 1.1
    seed: int = 0


def _keyword_vocab(size: int) -> list[str]:
    vocab = []
    for first in _WORDS:
        for second in _WORDS:
            vocab.append(first + second)
            if len(vocab) == size:
                return vocab
    raise InvalidSpecError(f"vocab_size {size} exceeds generator capacity")


def generate_population_views(spec: PopulationSpec):
    """Returns (pages: url -> keyword tuple, views: list of (user_id, url)).

    Page popularity is Zipf-distributed, so any two large-enough user
    subsets of the same population see similar keyword weights.
    """
    catalog_rng = random.Random(f"catalog:{spec.catalog_id}:{spec.seed}")
    vocab = _keyword_vocab(spec.vocab_size)
    urls = [f"{spec.catalog_id}.example/article/{i:04d}"
            for i in range(spec.n_pages)]
    pages = {url: tuple(catalog_rng.sample(vocab, spec.keywords_per_page))
             for url in urls}

    weights = [1.0 / (rank + 1) ** spec.zipf_exponent
               for rank in range(spec.n_pages)]
    ranked = list(urls)
    catalog_rng.shuffle(ranked)

    view_rng = random.Random(f"views:{spec.catalog_id}:{spec.seed}")
    views = []
    for user_index in range(spec.n_users):
        user = f"{spec.catalog_id}-u{user_index:04d}"
        for url in view_rng.choices(ranked, weights=weights,
                                    k=spec.views_per_user):
            views.append((user, url))
    return pages, views
