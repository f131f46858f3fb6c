"""HTTP JSON API over a running engine.

Read-only endpoints against the engine's immutable snapshots; nothing
here can block or mutate the ingestion pipeline. Returns 503 until the
engine has finished its startup replay.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from clickfeed.analytics import LIVENESS_RETENTION_BINS
from clickfeed.engine import Engine
from clickfeed.promotion import BLOG, NEWS, OTHER, TOP_WINDOWS, VIDEO

TABS = ("live", "top", "hot")
CATEGORIES = (NEWS, VIDEO, BLOG, OTHER)
DEFAULT_LIVENESS_BINS = 48


def _feed_item_json(item, metadata):
    body = {
        "url": item.url,
        "category": item.category,
        "n_views": item.n_views,
        "t_first": item.t_first,
    }
    if item.score is not None:
        body["score"] = item.score
    page = metadata.get(item.url)
    if page is not None:
        body["preview"] = {"title": page.title}
        if page.language:
            body["preview"]["language"] = page.language
    return body


def create_app(engine: Engine, cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="clickfeed", docs_url=None, redoc_url=None)
    if cors_origins:
        app.add_middleware(CORSMiddleware, allow_origins=list(cors_origins),
                           allow_methods=["GET"], allow_headers=["*"])

    def require_ready():
        if not engine.ready:
            raise HTTPException(status_code=503,
                                detail="engine is replaying its startup state")

    @app.get("/api/feed/{tab}")
    def feed(tab: str, window: str | None = None, category: str | None = None):
        require_ready()
        if tab not in TABS:
            raise HTTPException(status_code=400,
                                detail=f"unknown tab {tab!r}, expected one of {TABS}")
        if tab != "top" and window is not None:
            raise HTTPException(status_code=400,
                                detail="window applies only to the top tab")
        if category is not None and category not in CATEGORIES:
            raise HTTPException(status_code=400,
                                detail=f"unknown category {category!r}")
        snapshot = engine.snapshot()
        if tab == "top":
            window = window or "1d"
            if window not in TOP_WINDOWS:
                raise HTTPException(
                    status_code=400,
                    detail=f"unknown window {window!r}, expected one of "
                           f"{sorted(TOP_WINDOWS)}")
            items = snapshot.top[window]
        elif tab == "hot":
            items = snapshot.hot
        else:
            items = snapshot.live
        if category is not None:
            items = tuple(i for i in items if i.category == category)
        return {
            "generated_at": snapshot.generated_at,
            "tab": tab,
            "window": window if tab == "top" else None,
            "items": [_feed_item_json(i, engine.page_metadata) for i in items],
        }

    @app.get("/api/metrics/liveness")
    def liveness_metrics(bins: int = Query(default=DEFAULT_LIVENESS_BINS)):
        require_ready()
        if bins < 1 or bins > LIVENESS_RETENTION_BINS:
            raise HTTPException(
                status_code=400,
                detail=f"bins must be in [1, {LIVENESS_RETENTION_BINS}]")
        return {
            "bin_seconds": engine.liveness.bin_seconds,
            "samples": [
                {"bin_start": s.bin_start,
                 "active_users": s.active_users,
                 "user_urls": s.user_urls,
                 "new_hot_urls": s.new_hot_urls}
                for s in engine.liveness.samples(last_n=bins)
            ],
        }

    @app.get("/api/status")
    def status():
        return engine.status()

    return app
