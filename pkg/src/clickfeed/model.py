"""Core record and URL model shared by every stage of the pipeline.

URLs are canonicalized once at the edge and passed around as immutable
``ParsedUrl`` values; everything downstream (cache keys, feature
extraction, feed serialization) works on the canonical rendering, so
two requests for the same page always collide where they should.
"""

from __future__ import annotations

import dataclasses
import hashlib
import hmac
from dataclasses import dataclass
from urllib.parse import urlsplit


class ClickfeedError(Exception):
    """Base class for errors raised by this package."""


class MalformedUrlError(ClickfeedError, ValueError):
    """Raised when a URL cannot be reduced to host + resource."""


class ConfigError(ClickfeedError, ValueError):
    """Raised for unknown keys, bad values, or unparseable config files."""


@dataclass(frozen=True)
class HttpRequestRecord:
    """One sniffed HTTP request, the unit every stage consumes.

    ``user_id`` is an opaque per-run pseudonym (see anonymize_user_id);
    ``referer`` is None when the request carried no Referer header.
    """

    timestamp: float
    user_id: str
    url: str
    referer: str | None
    user_agent: str
    dnt: bool = False


@dataclass(frozen=True)
class ParsedUrl:
    """Canonical form of a URL: lowercase host, resource path, query pairs.

    The scheme is dropped on purpose: requests for the same page over
    http and https must share one identity.
    """

    host: str
    path: str
    query_params: tuple[tuple[str, str], ...] = ()

    def render(self) -> str:
        if self.query_params:
            query = "&".join(f"{k}={v}" for k, v in self.query_params)
            return f"{self.host}{self.path}?{query}"
        return f"{self.host}{self.path}"

    @property
    def length(self) -> int:
        return len(self.render())

    def __str__(self) -> str:
        return self.render()


def canonicalize_url(raw: str) -> ParsedUrl:
    """Normalize a raw URL string into its canonical ParsedUrl.

    Lowercases the host, defaults a missing path to "/", drops the
    fragment, and keeps query parameters in their original order.
    Idempotent: canonicalizing a rendered ParsedUrl is a no-op.
    """
    if raw is None:
        raise MalformedUrlError("url is None")
    text = raw.strip()
    if not text:
        raise MalformedUrlError("empty url")
    if "://" not in text:
        text = "http://" + text
    try:
        parts = urlsplit(text)
    except ValueError as exc:
        raise MalformedUrlError(f"unparseable url: {raw!r}") from exc
    netloc = parts.netloc
    if "@" in netloc:
        netloc = netloc.rsplit("@", 1)[1]
    host = netloc.lower()
    if not host or host.startswith(":"):
        raise MalformedUrlError(f"no hostname in url: {raw!r}")
    path = parts.path or "/"
    params: list[tuple[str, str]] = []
    if parts.query:
        for piece in parts.query.split("&"):
            if not piece:
                continue
            key, _, value = piece.partition("=")
            params.append((key, value))
    return ParsedUrl(host=host, path=path, query_params=tuple(params))


def strip_params(url: ParsedUrl) -> ParsedUrl:
    """Drop the query string; display surfaces never leak tracking params."""
    if not url.query_params:
        return url
    return ParsedUrl(host=url.host, path=url.path)


def anonymize_user_id(client_address: str, user_agent: str, key: bytes) -> str:
    """Keyed one-way digest of (client address, user agent).

    Stable within one run (one key), unlinkable across runs. 16 hex
    chars keep collision odds negligible at deployment population sizes.
    """
    payload = client_address.encode("utf-8") + b"\x00" + user_agent.encode("utf-8")
    return hmac.new(key, payload, hashlib.sha256).hexdigest()[:16]


@dataclass
class EngineConfig:
    """Operating parameters for the whole pipeline.

    min_c: children a page must accumulate before it can be a candidate.
    max_p: maximum query parameters a candidate URL may carry.
    t_o_seconds: observation window for the candidate cache.
    k_anonymity: distinct in-window viewers required before promotion.
    t_p_seconds: ranking period; each t_p of freshness is worth one
        order of magnitude of views in the hot score.
    t0_epoch: absolute reference timestamp for the hot score.
    hot_expiry_seconds: maximum age of an item shown in the Hot feed.
    w_observations: observation count gate before the windowed
        classifier takes over from the on-the-fly one.
    bin_seconds: width of the arrival-history bins fed to the classifier.
    f_time_window_seconds: optional same-user grouping window (off in
        the online pipeline, used by the evaluation harness).
    hot_log_base: logarithm base of the view term in the hot score.
    n_live: number of entries kept in the Live feed.
    self_host: hostname of the promotion site itself; requests referred
        by it are ignored so the feeds cannot amplify themselves.
    reference_portals: comma-separated list of known portal URLs whose
        arrival profiles anchor the cross-correlation feature.
    """

    min_c: int = 2
    max_p: int = 0
    t_o_seconds: float = 15.0
    k_anonymity: int = 5
    t_p_seconds: float = 43200.0
    t0_epoch: float = 0.0
    hot_expiry_seconds: float = 86400.0
    w_observations: int = 10
    bin_seconds: int = 300
    f_time_window_seconds: float = 1.0
    hot_log_base: float = 10.0
    n_live: int = 50
    self_host: str = ""
    reference_portals: str = ""

    def __post_init__(self) -> None:
        if self.min_c < 0:
            raise ConfigError("min_c must be >= 0")
        if self.max_p < 0:
            raise ConfigError("max_p must be >= 0")
        for name in ("t_o_seconds", "t_p_seconds", "hot_expiry_seconds",
                     "f_time_window_seconds"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.k_anonymity < 1:
            raise ConfigError("k_anonymity must be >= 1")
        if self.w_observations < 1:
            raise ConfigError("w_observations must be >= 1")
        if self.bin_seconds <= 0:
            raise ConfigError("bin_seconds must be positive")
        if self.hot_log_base <= 1.0:
            raise ConfigError("hot_log_base must be > 1")
        if self.n_live < 1:
            raise ConfigError("n_live must be >= 1")

    def reference_portal_urls(self) -> list[ParsedUrl]:
        urls = []
        for piece in self.reference_portals.split(","):
            piece = piece.strip()
            if piece:
                urls.append(canonicalize_url(piece))
        return urls


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(EngineConfig)}


def _convert(name: str, text: str) -> object:
    kind = _CONFIG_FIELDS[name].type
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return text


def load_config(path: str) -> EngineConfig:
    """Parse a flat key=value config file into an EngineConfig.

    Keys must match EngineConfig field names exactly; anything else is
    rejected so typos fail loudly instead of silently using a default.
    """
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = _convert(key, value.strip())
    return EngineConfig(**values)


def save_config(config: EngineConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for f in dataclasses.fields(EngineConfig):
            handle.write(f"{f.name}={getattr(config, f.name)}\n")
