"""Service liveness metrics and the community-of-a-place analysis.

Liveness summarizes activity in 30-minute bins: distinct active users,
user-URLs found, and URLs newly entering the Hot feed. The community
analysis turns page text into keyword popularity vectors and compares
populations with Pearson correlation.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

import numpy as np

from clickfeed.model import ClickfeedError
from clickfeed.patterns import data_file, load_pattern_file

LIVENESS_BIN_SECONDS = 1800.0
LIVENESS_RETENTION_BINS = 336  # one week of 30-minute bins

_TOKEN = re.compile(r"[^\W\d_]+", re.UNICODE)


class EmptyDocumentError(ClickfeedError, ValueError):
    pass


class DegenerateDataError(ClickfeedError, ValueError):
    pass


class InsufficientUsersError(ClickfeedError, ValueError):
    pass


# ------------------------------------------------------------ liveness

@dataclass(frozen=True)
class LivenessSample:
    bin_start: float
    active_users: int
    user_urls: int
    new_hot_urls: int


@dataclass(frozen=True)
class LivenessEvent:
    timestamp: float
    kind: str  # request | user_url | hot_entry
    user_id: str = ""
    url: str = ""


def liveness(events, bin_seconds: float = LIVENESS_BIN_SECONDS,
             span: tuple[float, float] | None = None) -> list[LivenessSample]:
    """One sample per bin, contiguous over the covered span.

    The span defaults to [first event, last event]; pass one explicitly
    (end-exclusive) to report quiet bins of a known observation window.
    new_hot_urls counts only the first sighting of each URL.
    """
    rows = sorted(events, key=lambda e: e.timestamp)
    if span is not None:
        start_bin = int(span[0] // bin_seconds)
        end_bin = int(math.ceil(span[1] / bin_seconds)) - 1
    elif rows:
        start_bin = int(rows[0].timestamp // bin_seconds)
        end_bin = int(rows[-1].timestamp // bin_seconds)
    else:
        return []
    if end_bin < start_bin:
        return []

    users: dict[int, set[str]] = {}
    user_urls: dict[int, int] = {}
    hot: dict[int, int] = {}
    seen_hot: set[str] = set()
    for event in rows:
        idx = int(event.timestamp // bin_seconds)
        if idx < start_bin or idx > end_bin:
            continue
        if event.kind == "request":
            users.setdefault(idx, set()).add(event.user_id)
        elif event.kind == "user_url":
            user_urls[idx] = user_urls.get(idx, 0) + 1
        elif event.kind == "hot_entry":
            if event.url not in seen_hot:
                seen_hot.add(event.url)
                hot[idx] = hot.get(idx, 0) + 1

    return [LivenessSample(bin_start=idx * bin_seconds,
                           active_users=len(users.get(idx, ())),
                           user_urls=user_urls.get(idx, 0),
                           new_hot_urls=hot.get(idx, 0))
            for idx in range(start_bin, end_bin + 1)]


class LivenessTracker:
    """Streaming counterpart of liveness() with bounded retention."""

    def __init__(self, bin_seconds: float = LIVENESS_BIN_SECONDS,
                 retention_bins: int = LIVENESS_RETENTION_BINS) -> None:
        self.bin_seconds = bin_seconds
        self.retention_bins = retention_bins
        self._users: dict[int, set[str]] = {}
        self._user_urls: dict[int, int] = {}
        self._hot: dict[int, int] = {}
        self._seen_hot: set[str] = set()
        self._first_bin: int | None = None
        self._last_bin: int | None = None

    def _bin(self, timestamp: float) -> int:
        idx = int(timestamp // self.bin_seconds)
        if self._first_bin is None or idx < self._first_bin:
            self._first_bin = idx
        if self._last_bin is None or idx > self._last_bin:
            self._last_bin = idx
            floor = idx - self.retention_bins + 1
            for table in (self._users, self._user_urls, self._hot):
                for old in [key for key in table if key < floor]:
                    del table[old]
        return idx

    def note_request(self, timestamp: float, user_id: str) -> None:
        self._users.setdefault(self._bin(timestamp), set()).add(user_id)

    def note_user_url(self, timestamp: float) -> None:
        idx = self._bin(timestamp)
        self._user_urls[idx] = self._user_urls.get(idx, 0) + 1

    def note_hot_entry(self, timestamp: float, url: str) -> None:
        idx = self._bin(timestamp)  # advances coverage even for repeats
        if url in self._seen_hot:
            return
        self._seen_hot.add(url)
        self._hot[idx] = self._hot.get(idx, 0) + 1

    def samples(self, last_n: int | None = None) -> list[LivenessSample]:
        """Oldest-first contiguous samples ending at the newest bin."""
        if self._last_bin is None:
            return []
        newest = self._last_bin
        start = max(self._first_bin, newest - self.retention_bins + 1)
        if last_n is not None:
            start = max(start, newest - last_n + 1)
        return [LivenessSample(bin_start=idx * self.bin_seconds,
                               active_users=len(self._users.get(idx, ())),
                               user_urls=self._user_urls.get(idx, 0),
                               new_hot_urls=self._hot.get(idx, 0))
                for idx in range(start, newest + 1)]


# ------------------------------------------------------------ keywords

def default_stop_words() -> frozenset[str]:
    return frozenset(load_pattern_file(data_file("stopwords_en.txt")))


def extract_keywords(title: str, body: str, stop_words=None,
                     title_weight: int = 2, top_n: int = 10,
                     min_length: int = 3) -> list[str]:
    """Top-N terms by frequency; title occurrences count title_weight times.

    Tokens are lowercase alphabetic runs of at least min_length chars,
    stop words removed; ties resolve lexicographically.
    """
    if stop_words is None:
        stop_words = default_stop_words()
    counts: dict[str, int] = {}

    def feed(text: str, weight: int) -> None:
        for token in _TOKEN.findall(text.lower()):
            if len(token) < min_length or token in stop_words:
                continue
            counts[token] = counts.get(token, 0) + weight

    feed(title, title_weight)
    feed(body, 1)
    if not counts:
        raise EmptyDocumentError("no tokens survive filtering")
    ranked = sorted(counts.items(), key=lambda pair: (-pair[1], pair[0]))
    return [token for token, _ in ranked[:top_n]]


@dataclass(frozen=True)
class KeywordSet:
    population_id: str
    weights: dict[str, int] = field(default_factory=dict)


def keyword_popularity(pages, population_id: str = "") -> KeywordSet:
    """weight(k) = sum of view counts over the pages containing k."""
    weights: dict[str, int] = {}
    for keywords, view_count in pages:
        if view_count < 1:
            raise ValueError(f"view_count must be >= 1, got {view_count}")
        for keyword in set(keywords):
            weights[keyword] = weights.get(keyword, 0) + view_count
    return KeywordSet(population_id=population_id, weights=weights)


def pearson(a: KeywordSet, b: KeywordSet) -> float:
    """Pearson correlation over the union keyword space, absent keys as 0."""
    keys = sorted(set(a.weights) | set(b.weights))
    if len(keys) < 2:
        raise DegenerateDataError("need at least 2 keywords in the union")
    va = np.array([a.weights.get(k, 0) for k in keys], dtype=float)
    vb = np.array([b.weights.get(k, 0) for k in keys], dtype=float)
    da = va - va.mean()
    db = vb - vb.mean()
    norm = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if norm == 0.0:
        raise DegenerateDataError("zero-variance weight vector")
    value = float(np.dot(da, db)) / norm
    return max(-1.0, min(1.0, value))


def split_populations(trace, n_subsets: int, subset_size: int,
                      seed: int) -> list[set[str]]:
    """Deterministic disjoint user subsets of exactly subset_size each.

    Disjointness keeps same-population comparisons honest: overlap
    would manufacture correlation. Requires n_subsets * subset_size
    distinct users.
    """
    users: set[str] = set()
    for row in trace:
        users.add(row.user_id if hasattr(row, "user_id") else str(row))
    needed = n_subsets * subset_size
    if len(users) < needed:
        raise InsufficientUsersError(
            f"need {needed} distinct users for {n_subsets} disjoint subsets "
            f"of {subset_size}, trace has {len(users)}")
    ordered = sorted(users)
    random.Random(seed).shuffle(ordered)
    return [set(ordered[i * subset_size:(i + 1) * subset_size])
            for i in range(n_subsets)]


# ------------------------------------------------------------ page corpus

_ESCAPES = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t") \
        .replace("\n", "\\n").replace("\r", "\\r")


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        pair = text[i:i + 2]
        if pair in _ESCAPES:
            out.append(_ESCAPES[pair])
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class PageText:
    title: str
    body: str
    language: str = ""


def save_page_corpus(pages: dict[str, PageText], path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for url in sorted(pages):
            page = pages[url]
            row = f"{url}\t{_escape(page.title)}\t{_escape(page.body)}"
            if page.language:
                row += f"\t{page.language}"
            handle.write(row + "\n")


def load_page_corpus(path: str) -> dict[str, PageText]:
    pages: dict[str, PageText] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (3, 4):
                raise ValueError(f"{path}:{number}: expected 3 or 4 columns, "
                                 f"got {len(parts)}")
            language = parts[3] if len(parts) == 4 else ""
            pages[parts[0]] = PageText(title=_unescape(parts[1]),
                                       body=_unescape(parts[2]),
                                       language=language)
    return pages
