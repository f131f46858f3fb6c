"""Content promotion: categories, view counters, and the three feeds.

Views of decided content-URLs feed per-item counters; the Live Stream,
Top, and Hot feeds are pure reads over that state. Privacy rules are
enforced on the write path: DoNotTrack and self-referred requests never
touch state, viewer identities live at most 24 hours, and Top/Hot only
show items whose recent distinct-viewer count clears the k-anonymity
threshold.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from clickfeed.model import EngineConfig, HttpRequestRecord, MalformedUrlError, \
    ParsedUrl, canonicalize_url, strip_params
from clickfeed.patterns import HostSuffixSet, load_pattern_file, data_file

NEWS = "news"
VIDEO = "video"
BLOG = "blog"
OTHER = "other"

LIVE_CATEGORIES = (NEWS, VIDEO, BLOG)

TOP_WINDOWS = {"1d": 86400.0, "7d": 604800.0, "30d": 2592000.0}

VIEWER_RETENTION_SECONDS = 86400.0
BUCKET_SECONDS = 3600.0


@dataclass(frozen=True)
class CategoryLists:
    news: HostSuffixSet
    video: HostSuffixSet
    blog: HostSuffixSet

    @classmethod
    def load_default(cls) -> "CategoryLists":
        return cls(
            news=HostSuffixSet(load_pattern_file(data_file("news_hosts.txt"))),
            video=HostSuffixSet(load_pattern_file(data_file("video_hosts.txt"))),
            blog=HostSuffixSet(load_pattern_file(data_file("blog_hosts.txt"))),
        )


def categorize(url: ParsedUrl, lists: CategoryLists) -> str:
    """First matching list in priority order news > video > blog, else other."""
    if url.host in lists.news:
        return NEWS
    if url.host in lists.video:
        return VIDEO
    if url.host in lists.blog:
        return BLOG
    return OTHER


def hot_score(n_views: int, t_first: float, t0: float, t_p: float,
              base: float = 10.0) -> float:
    """log_base(n_views) + (t_first - t0) / t_p.

    One unit of score equals one freshness period of age or a factor of
    `base` in views; fresh items thereby overtake stale popular ones.
    """
    if n_views < 1:
        raise ValueError(f"n_views must be >= 1, got {n_views}")
    return math.log(n_views, base) + (t_first - t0) / t_p


class PromotedItem:
    """Counters for one promoted content-URL (parameter-stripped key)."""

    __slots__ = ("url", "category", "n_views", "t_first", "score",
                 "viewers", "buckets")

    def __init__(self, url: ParsedUrl, category: str, t_first: float) -> None:
        self.url = url
        self.category = category
        self.n_views = 0
        self.t_first = t_first
        self.score = 0.0
        self.viewers: dict[str, float] = {}  # user_id -> last seen, <= 24h old
        self.buckets: deque[list[float]] = deque()  # [bucket_start, count]

    def add_view(self, user_id: str, timestamp: float) -> None:
        self.n_views += 1
        previous = self.viewers.get(user_id)
        if previous is None or timestamp > previous:
            self.viewers[user_id] = timestamp
        start = (timestamp // BUCKET_SECONDS) * BUCKET_SECONDS
        if self.buckets and self.buckets[-1][0] == start:
            self.buckets[-1][1] += 1
        else:
            self.buckets.append([start, 1.0])

    def prune(self, now: float) -> None:
        horizon = now - VIEWER_RETENTION_SECONDS
        stale = [user for user, seen in self.viewers.items() if seen <= horizon]
        for user in stale:
            del self.viewers[user]
        oldest_needed = now - max(TOP_WINDOWS.values()) - 2 * BUCKET_SECONDS
        while self.buckets and self.buckets[0][0] < oldest_needed:
            self.buckets.popleft()

    def distinct_viewers(self, now: float) -> int:
        horizon = now - VIEWER_RETENTION_SECONDS
        return sum(1 for seen in self.viewers.values() if seen > horizon)

    def views_in_window(self, now: float, window_seconds: float) -> int:
        edge = ((now - window_seconds) // BUCKET_SECONDS) * BUCKET_SECONDS
        return int(sum(count for start, count in self.buckets if start >= edge))


@dataclass(frozen=True)
class FeedItem:
    url: str
    category: str
    n_views: int
    t_first: float
    score: float | None


class PromotionState:
    """Single-writer promotion state; reads build plain lists for snapshots."""

    def __init__(self, config: EngineConfig, lists: CategoryLists | None = None,
                 deny_hosts: HostSuffixSet | None = None) -> None:
        self.config = config
        self.lists = lists if lists is not None else CategoryLists.load_default()
        self.deny = deny_hosts if deny_hosts is not None else HostSuffixSet([])
        self.items: dict[str, PromotedItem] = {}
        self._live: deque[str] = deque()  # item keys, newest click first

    def record_view(self, record: HttpRequestRecord, now: float | None = None) -> None:
        """Apply one content view, or drop it under the privacy/deny rules."""
        if record.dnt:
            return
        url = canonicalize_url(record.url)
        if record.referer and self.config.self_host:
            try:
                if canonicalize_url(record.referer).host == self.config.self_host:
                    return
            except MalformedUrlError:
                pass
        if url.host in self.deny:
            return
        timestamp = record.timestamp if now is None else now
        display = strip_params(url)
        key = display.render()
        item = self.items.get(key)
        if item is None:
            item = PromotedItem(display, categorize(display, self.lists), timestamp)
            self.items[key] = item
        item.add_view(record.user_id, timestamp)
        item.prune(timestamp)
        item.score = hot_score(item.n_views, item.t_first,
                               self.config.t0_epoch, self.config.t_p_seconds,
                               self.config.hot_log_base)
        if item.category in LIVE_CATEGORIES:
            try:
                self._live.remove(key)
            except ValueError:
                pass
            self._live.appendleft(key)
            while len(self._live) > self.config.n_live:
                self._live.pop()

    def _anonymous_enough(self, item: PromotedItem, now: float) -> bool:
        return item.distinct_viewers(now) >= self.config.k_anonymity

    def feed_top(self, window: str, now: float) -> list[FeedItem]:
        if window not in TOP_WINDOWS:
            raise ValueError(f"unknown window {window!r}, expected one of "
                             f"{sorted(TOP_WINDOWS)}")
        seconds = TOP_WINDOWS[window]
        rows = []
        for item in self.items.values():
            if not self._anonymous_enough(item, now):
                continue
            windowed = item.views_in_window(now, seconds)
            if windowed < 1:
                continue
            rows.append((windowed, item))
        rows.sort(key=lambda pair: (-pair[0], pair[1].t_first, pair[1].url.render()))
        return [FeedItem(item.url.render(), item.category, windowed,
                         item.t_first, item.score)
                for windowed, item in rows]

    def feed_hot(self, now: float) -> list[FeedItem]:
        rows = []
        for item in self.items.values():
            if now - item.t_first > self.config.hot_expiry_seconds:
                continue
            if not self._anonymous_enough(item, now):
                continue
            rows.append(item)
        rows.sort(key=lambda item: (-item.score, item.t_first, item.url.render()))
        return [FeedItem(item.url.render(), item.category, item.n_views,
                         item.t_first, item.score)
                for item in rows]

    def feed_live(self, now: float | None = None) -> list[FeedItem]:
        out = []
        for key in self._live:
            item = self.items[key]
            out.append(FeedItem(item.url.render(), item.category, item.n_views,
                                item.t_first, None))
        return out
