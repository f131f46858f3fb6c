"""The streaming pipeline: requests in, feed snapshots out.

One Engine instance owns every stage (candidate detection, online
portal/content classification, view counting, liveness metrics) and
periodically publishes immutable feed snapshots for the API layer.
Privacy drops (DoNotTrack, self-referred requests) and the browser
user-agent gate happen at the front door, before any state is touched,
so excluded traffic cannot influence any output even indirectly.
"""

from __future__ import annotations

import os
import resource
import time
from dataclasses import dataclass

from clickfeed.analytics import LivenessTracker
from clickfeed.classifier import (
    CONTENT,
    ON_THE_FLY_FEATURES,
    WINDOWED_FEATURES,
    KnowledgeDatabase,
    OnlineClassifier,
    UrlProfile,
    load_corpus,
    load_model,
    save_model,
    train,
)
from clickfeed.detector import ClickDetector, DetectorConfig, is_browser_agent
from clickfeed.ingest import ReplayStats, replay
from clickfeed.model import EngineConfig, HttpRequestRecord, MalformedUrlError, \
    canonicalize_url
from clickfeed.patterns import HostSuffixSet, PatternSet, data_file
from clickfeed.promotion import CategoryLists, FeedItem, PromotionState, \
    TOP_WINDOWS

SNAPSHOT_EVERY_RECORDS = 1000
SNAPSHOT_EVERY_SECONDS = 1.0

ON_THE_FLY_MODEL_FILE = "on_the_fly.model"
WINDOWED_MODEL_FILE = "windowed.model"


@dataclass(frozen=True)
class Snapshot:
    """Point-in-time feed state; replaced atomically, never mutated."""

    generated_at: float
    live: tuple[FeedItem, ...]
    top: dict[str, tuple[FeedItem, ...]]
    hot: tuple[FeedItem, ...]


@dataclass
class EngineCounters:
    requests_processed: int = 0
    malformed_urls: int = 0
    dropped_dnt: int = 0
    dropped_agent: int = 0
    dropped_self_referer: int = 0
    candidates_emitted: int = 0
    content_decisions: int = 0
    portal_decisions: int = 0
    views_recorded: int = 0
    snapshots_published: int = 0


class Engine:
    def __init__(self, config: EngineConfig,
                 patterns: PatternSet | None = None,
                 lists: CategoryLists | None = None,
                 deny_hosts: HostSuffixSet | None = None,
                 knowledge_path: str | None = None,
                 model_dir: str | None = None,
                 corpus_path: str | None = None,
                 page_metadata: dict | None = None) -> None:
        self.config = config
        self.patterns = patterns if patterns is not None else PatternSet.load_default()
        self.detector = ClickDetector(DetectorConfig.from_engine(config),
                                      self.patterns)
        self.promotion = PromotionState(config, lists=lists, deny_hosts=deny_hosts)
        self.liveness = LivenessTracker()
        self.page_metadata = page_metadata or {}

        corpus = load_corpus(corpus_path or data_file("seed_corpus.tsv"))
        self.on_the_fly, self.windowed = self._models(corpus, model_dir)
        self.knowledge = KnowledgeDatabase(knowledge_path)
        self.online = OnlineClassifier(self.on_the_fly, self.windowed,
                                       self.knowledge, config.w_observations)

        self.profiles: dict[str, UrlProfile] = {}
        self.reference_profiles: list[UrlProfile] = []
        for url in config.reference_portal_urls():
            profile = UrlProfile(url, config.bin_seconds)
            self.profiles[url.render()] = profile
            self.reference_profiles.append(profile)

        self.host_candidates: dict[str, int] = {}
        self._candidate_keys: set[str] = set()
        self.content_urls: set[str] = set()

        self.counters = EngineCounters()
        self._stream_now = 0.0
        self._records_since_publish = 0
        self._last_publish_wall = time.monotonic()
        self._started_wall = time.monotonic()
        self._snapshot = Snapshot(generated_at=0.0, live=(), hot=(),
                                  top={w: () for w in TOP_WINDOWS})
        self.ready = False

    @staticmethod
    def _models(corpus, model_dir):
        if model_dir:
            fly_path = os.path.join(model_dir, ON_THE_FLY_MODEL_FILE)
            win_path = os.path.join(model_dir, WINDOWED_MODEL_FILE)
            if os.path.exists(fly_path) and os.path.exists(win_path):
                return load_model(fly_path), load_model(win_path)
        fly = train(corpus, ON_THE_FLY_FEATURES)
        win = train(corpus, WINDOWED_FEATURES)
        if model_dir:
            os.makedirs(model_dir, exist_ok=True)
            save_model(fly, os.path.join(model_dir, ON_THE_FLY_MODEL_FILE))
            save_model(win, os.path.join(model_dir, WINDOWED_MODEL_FILE))
        return fly, win

    # -------------------------------------------------------- stream side

    def process_record(self, record: HttpRequestRecord) -> None:
        self._consume(record)
        self._records_since_publish += 1
        if self._records_since_publish >= SNAPSHOT_EVERY_RECORDS or \
                time.monotonic() - self._last_publish_wall >= SNAPSHOT_EVERY_SECONDS:
            self.publish_snapshot()

    def _consume(self, record: HttpRequestRecord) -> None:
        try:
            url = canonicalize_url(record.url)
        except MalformedUrlError:
            self.counters.malformed_urls += 1
            return
        self.counters.requests_processed += 1
        self._stream_now = max(self._stream_now, record.timestamp)

        # front-door drops: excluded traffic must leave zero trace
        if record.dnt:
            self.counters.dropped_dnt += 1
            return
        if not is_browser_agent(record.user_agent,
                                self.patterns.browser_prefixes):
            self.counters.dropped_agent += 1
            return
        if record.referer is not None and self.config.self_host:
            try:
                if canonicalize_url(record.referer).host == self.config.self_host:
                    self.counters.dropped_self_referer += 1
                    return
            except MalformedUrlError:
                pass

        self.liveness.note_request(record.timestamp, record.user_id)

        key = url.render()
        profile = self.profiles.get(key)
        if profile is not None:
            profile.record(record.timestamp)

        for event in self.detector.process(record):
            self._handle_candidate(event)

        if key in self.content_urls:
            self.promotion.record_view(record)
            self.counters.views_recorded += 1

    def _handle_candidate(self, event) -> None:
        self.counters.candidates_emitted += 1
        url = event.url
        key = url.render()
        self.liveness.note_user_url(event.timestamp)

        if key not in self._candidate_keys:
            self._candidate_keys.add(key)
            self.host_candidates[url.host] = self.host_candidates.get(url.host, 0) + 1

        profile = self.profiles.get(key)
        if profile is None:
            profile = UrlProfile(url, self.config.bin_seconds)
            self.profiles[key] = profile
        profile.record(event.timestamp)
        if url.path == "/" and not url.query_params:
            profile.freq_as_hostname = self.host_candidates.get(url.host, 0)

        label, _source = self.online.classify_event(
            url, profile, self.reference_profiles, now=self._stream_now)
        if label == CONTENT:
            self.counters.content_decisions += 1
            self.content_urls.add(key)
        else:
            self.counters.portal_decisions += 1
            # a later, better-informed portal verdict stops view counting
            self.content_urls.discard(key)

    def drain(self) -> None:
        """End of stream: decide still-pending candidates, then publish."""
        for event in self.detector.drain():
            self._handle_candidate(event)
        self.publish_snapshot()

    def run(self, trace_path: str, speed: float = 0.0) -> ReplayStats:
        stats = ReplayStats()
        self.ready = True
        for record in replay(trace_path, speed=speed, stats=stats):
            self.process_record(record)
        self.drain()
        return stats

    # -------------------------------------------------------- read side

    def publish_snapshot(self) -> Snapshot:
        now = self._stream_now
        hot = tuple(self.promotion.feed_hot(now))
        snapshot = Snapshot(
            generated_at=now,
            live=tuple(self.promotion.feed_live(now)),
            top={w: tuple(self.promotion.feed_top(w, now)) for w in TOP_WINDOWS},
            hot=hot,
        )
        for item in hot:
            self.liveness.note_hot_entry(now, item.url)
        self._snapshot = snapshot
        self.counters.snapshots_published += 1
        self._records_since_publish = 0
        self._last_publish_wall = time.monotonic()
        return snapshot

    def snapshot(self) -> Snapshot:
        return self._snapshot

    def status(self) -> dict:
        c = self.counters
        return {
            "ready": self.ready,
            "requests_processed": c.requests_processed,
            "malformed_urls": c.malformed_urls,
            "dropped_dnt": c.dropped_dnt,
            "dropped_agent": c.dropped_agent,
            "dropped_self_referer": c.dropped_self_referer,
            "candidates_emitted": c.candidates_emitted,
            "content_decisions": c.content_decisions,
            "portal_decisions": c.portal_decisions,
            "views_recorded": c.views_recorded,
            "snapshots_published": c.snapshots_published,
            "knowledge_size": len(self.knowledge),
            "tracked_profiles": len(self.profiles),
            "promoted_items": len(self.promotion.items),
            "memory_mb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0,
            "uptime_seconds": time.monotonic() - self._started_wall,
            "stream_time": self._stream_now,
        }
