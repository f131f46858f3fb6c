"""Passive clickstream mining and crowdsourced content promotion.

The package watches a stream of HTTP request records, detects the URLs
users intentionally clicked, separates portals from actual content, and
maintains privacy-preserving Live/Top/Hot feeds served over a JSON API.
"""

from clickfeed.model import (
    EngineConfig,
    HttpRequestRecord,
    MalformedUrlError,
    ParsedUrl,
    canonicalize_url,
    strip_params,
)

__all__ = [
    "EngineConfig",
    "HttpRequestRecord",
    "MalformedUrlError",
    "ParsedUrl",
    "canonicalize_url",
    "strip_params",
]

__version__ = "0.1.0"
