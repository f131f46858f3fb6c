"""Online click detection over the raw request stream.

A page a person actually clicked shows up in the traffic as a burst of
children requests all naming it in their Referer header. The detector
keeps per-referer rolling state (first-seen time, child count, social
flag) for an observation window, then either emits the URL as a
candidate or discards it. Flush scheduling uses a time-ordered expiry
queue so each step costs O(expired entries), not O(cache); the
throughput target rules out full-cache scans per request.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from clickfeed.model import (
    EngineConfig,
    HttpRequestRecord,
    MalformedUrlError,
    ParsedUrl,
    canonicalize_url,
)
from clickfeed.patterns import PatternSet


def is_browser_agent(user_agent: str, prefixes: list[str]) -> bool:
    """True iff the agent matches the interactive-browser allow-list."""
    if not user_agent:
        return False
    return any(user_agent.startswith(p) for p in prefixes)


def is_accessory_resource(url: ParsedUrl, extensions: frozenset[str]) -> bool:
    """True iff the last path segment carries a deny-listed extension."""
    segment = url.path.rsplit("/", 1)[-1]
    if "." not in segment:
        return False
    return segment.rsplit(".", 1)[-1].lower() in extensions


def is_ad_url(url: ParsedUrl, ad_hosts) -> bool:
    return url.host in ad_hosts


def within_param_limit(url: ParsedUrl, max_p: int) -> bool:
    return len(url.query_params) <= max_p


def is_social_plugin(url: ParsedUrl, social) -> bool:
    return social.matches(url)


@dataclass(frozen=True)
class FilterVerdict:
    passed: bool
    failed_filter: str | None = None

    def __post_init__(self) -> None:
        assert self.passed == (self.failed_filter is None)


@dataclass(frozen=True)
class CandidateEvent:
    """One emitted candidate: when it was first clicked, what, from where."""

    timestamp: float
    url: ParsedUrl
    referer: ParsedUrl | None


class CandidateCacheEntry:
    __slots__ = ("url", "key", "first_seen", "children", "social_flag", "parent")

    def __init__(self, url: ParsedUrl, key: str, first_seen: float,
                 social: bool, parent: ParsedUrl | None) -> None:
        self.url = url
        self.key = key
        self.first_seen = first_seen
        self.children = 1
        self.social_flag = social
        self.parent = parent


@dataclass
class DetectorConfig:
    """Which checks apply, and with what thresholds.

    The default matches the online pipeline: type filter at insertion,
    social flag, child count, param cap and ad filter at emission.
    The harness swaps in looser compositions to measure their
    recall/precision trade-off. max_params=None disables the cap.
    The text+title predicate needs page metadata the pipeline does not
    fetch, so it stays off unless an operator supplies a metadata map.
    """

    min_children: int = 2
    max_params: int | None = 0
    observation_seconds: float = 15.0
    require_social: bool = True
    use_type_filter: bool = True
    use_ad_filter: bool = True
    require_text_and_title: bool = False
    min_text_chars: int = 500

    @classmethod
    def from_engine(cls, config: EngineConfig) -> "DetectorConfig":
        return cls(min_children=config.min_c, max_params=config.max_p,
                   observation_seconds=config.t_o_seconds)


@dataclass
class DetectorStats:
    requests: int = 0
    dropped_agent: int = 0
    dropped_self: int = 0
    malformed_urls: int = 0
    inserted: int = 0
    flushed: int = 0
    emitted: int = 0


class ClickDetector:
    """Streaming candidate-URL detector with bounded per-window memory.

    Feed records in timestamp order via process(); call drain() once at
    end of stream so entries still under observation get their verdict.
    flush_listener, when set, is called as (entry, verdict) for every
    flushed entry, emitted or not; the engine uses it for liveness
    accounting.
    """

    def __init__(self, config: DetectorConfig, patterns: PatternSet,
                 page_metadata: dict[str, tuple[str, str]] | None = None) -> None:
        self.config = config
        self.patterns = patterns
        self.page_metadata = page_metadata or {}
        self.stats = DetectorStats()
        self.flush_listener = None
        self._cache: dict[str, CandidateCacheEntry] = {}
        self._expiry: deque[tuple[float, str]] = deque()
        self._fetched_from: dict[str, tuple[ParsedUrl, float]] = {}
        self._fetched_expiry: deque[tuple[float, str]] = deque()
        self._now = float("-inf")

    def __len__(self) -> int:
        return len(self._cache)

    def verdict(self, entry: CandidateCacheEntry) -> FilterVerdict:
        cfg = self.config
        if cfg.require_social and not entry.social_flag:
            return FilterVerdict(False, "social")
        if entry.children < cfg.min_children:
            return FilterVerdict(False, "children")
        if cfg.max_params is not None and not within_param_limit(entry.url, cfg.max_params):
            return FilterVerdict(False, "params")
        if cfg.use_ad_filter and is_ad_url(entry.url, self.patterns.ad_hosts):
            return FilterVerdict(False, "ad")
        if cfg.require_text_and_title:
            meta = self.page_metadata.get(entry.key)
            if meta is None or not meta[0] or len(meta[1]) < cfg.min_text_chars:
                return FilterVerdict(False, "metadata")
        return FilterVerdict(True)

    def process(self, record: HttpRequestRecord,
                now: float | None = None) -> list[CandidateEvent]:
        """Advance the stream by one request; returns candidates flushed now."""
        if now is None:
            now = record.timestamp
        self._now = max(self._now, now)
        self.stats.requests += 1
        emitted = self._flush(self._now)

        if not is_browser_agent(record.user_agent, self.patterns.browser_prefixes):
            self.stats.dropped_agent += 1
            return emitted
        try:
            url = canonicalize_url(record.url)
        except MalformedUrlError:
            self.stats.malformed_urls += 1
            return emitted
        referer: ParsedUrl | None = None
        if record.referer is not None:
            try:
                referer = canonicalize_url(record.referer)
            except MalformedUrlError:
                referer = None

        if referer is None:
            return emitted
        key = referer.render()
        url_key = url.render()
        if url_key == key:
            self.stats.dropped_self += 1
            return emitted

        entry = self._cache.get(key)
        if entry is not None:
            entry.children += 1
            if not entry.social_flag and is_social_plugin(url, self.patterns.social):
                entry.social_flag = True
        elif not self.config.use_type_filter or not is_accessory_resource(
                referer, self.patterns.accessory_extensions):
            parent_hit = self._fetched_from.get(key)
            entry = CandidateCacheEntry(
                url=referer, key=key, first_seen=record.timestamp,
                social=is_social_plugin(url, self.patterns.social),
                parent=parent_hit[0] if parent_hit else None)
            self._cache[key] = entry
            self._expiry.append((entry.first_seen, key))
            self.stats.inserted += 1

        # Remember where this page was fetched from; if it later turns
        # into a candidate, that referer becomes the emission's parent.
        self._fetched_from[url_key] = (referer, record.timestamp)
        self._fetched_expiry.append((record.timestamp, url_key))
        return emitted

    def drain(self) -> list[CandidateEvent]:
        """End of stream: decide every entry still under observation."""
        emitted = []
        for key in list(self._cache):
            event = self._decide(self._cache.pop(key))
            if event is not None:
                emitted.append(event)
        self._expiry.clear()
        self._fetched_from.clear()
        self._fetched_expiry.clear()
        return emitted

    def _decide(self, entry: CandidateCacheEntry) -> CandidateEvent | None:
        self.stats.flushed += 1
        verdict = self.verdict(entry)
        if self.flush_listener is not None:
            self.flush_listener(entry, verdict)
        if verdict.passed:
            self.stats.emitted += 1
            return CandidateEvent(entry.first_seen, entry.url, entry.parent)
        return None

    def _flush(self, now: float) -> list[CandidateEvent]:
        horizon = now - self.config.observation_seconds
        emitted: list[CandidateEvent] = []
        expiry = self._expiry
        cache = self._cache
        while expiry and expiry[0][0] < horizon:
            first_seen, key = expiry.popleft()
            entry = cache.get(key)
            if entry is None or entry.first_seen != first_seen:
                continue  # stale queue slot from a re-inserted key
            del cache[key]
            event = self._decide(entry)
            if event is not None:
                emitted.append(event)
        fetched = self._fetched_from
        fetched_expiry = self._fetched_expiry
        while fetched_expiry and fetched_expiry[0][0] < horizon:
            ts, key = fetched_expiry.popleft()
            current = fetched.get(key)
            if current is not None and current[1] == ts:
                del fetched[key]
        return emitted


def f_time_group(records: list, window: float,
                 timestamp=lambda r: r.timestamp) -> list[list]:
    """Group same-user candidates into windows of length `window`.

    Each group is anchored at its first record; everything inside the
    anchor's window joins that group, and only the anchor (group[0])
    survives the filter. Off in the default pipeline, harness only.
    """
    groups: list[list] = []
    anchor_time = None
    for record in records:
        t = timestamp(record)
        if anchor_time is None or t >= anchor_time + window:
            groups.append([record])
            anchor_time = t
        else:
            groups[-1].append(record)
    return groups


def f_time_survivors(records: list, window: float,
                     timestamp=lambda r: r.timestamp) -> list:
    return [group[0] for group in f_time_group(records, window, timestamp)]
