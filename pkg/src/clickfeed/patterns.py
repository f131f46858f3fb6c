"""Loaders and matchers for the editable pattern lists.

All lists share one file format: one pattern per line, blank lines and
'#' comments ignored. Host lists match by registered-domain suffix, so
an entry covers the domain itself and every subdomain. Social-plugin
patterns add an optional path prefix after the host.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from clickfeed.model import ParsedUrl

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def load_pattern_file(path: str) -> list[str]:
    patterns: list[str] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            patterns.append(line)
    return patterns


def data_file(name: str) -> str:
    return os.path.join(DATA_DIR, name)


class HostSuffixSet:
    """Suffix matcher over registered domains.

    An entry "doubleclick.net" matches "doubleclick.net" and
    "ad.doubleclick.net" but not "notdoubleclick.net".
    """

    def __init__(self, entries: list[str]) -> None:
        self._exact = {e.lower().rstrip("/") for e in entries}

    def __contains__(self, host: str) -> bool:
        host = host.lower()
        if host in self._exact:
            return True
        # Walk suffixes instead of scanning entries: O(labels) per host.
        idx = host.find(".")
        while idx != -1:
            if host[idx + 1:] in self._exact:
                return True
            idx = host.find(".", idx + 1)
        return False

    def __len__(self) -> int:
        return len(self._exact)


class UrlPrefixSet:
    """Matcher for host[/path-prefix] patterns (the social-plugin list)."""

    def __init__(self, entries: list[str]) -> None:
        self._by_host: dict[str, list[str]] = {}
        for entry in entries:
            entry = entry.lower()
            host, slash, rest = entry.partition("/")
            prefix = "/" + rest if slash else "/"
            self._by_host.setdefault(host, []).append(prefix)

    def matches(self, url: ParsedUrl) -> bool:
        host = url.host
        candidates: list[str] = []
        if host in self._by_host:
            candidates.extend(self._by_host[host])
        idx = host.find(".")
        while idx != -1:
            suffix = host[idx + 1:]
            if suffix in self._by_host:
                candidates.extend(self._by_host[suffix])
            idx = host.find(".", idx + 1)
        return any(url.path.lower().startswith(p) for p in candidates)


@dataclass
class PatternSet:
    """All editable lists the detector and promotion stages consult."""

    browser_prefixes: list[str] = field(default_factory=list)
    social: UrlPrefixSet = field(default_factory=lambda: UrlPrefixSet([]))
    ad_hosts: HostSuffixSet = field(default_factory=lambda: HostSuffixSet([]))
    accessory_extensions: frozenset[str] = frozenset()

    @classmethod
    def load_default(cls) -> "PatternSet":
        return cls(
            browser_prefixes=load_pattern_file(data_file("browser_agents.txt")),
            social=UrlPrefixSet(load_pattern_file(data_file("social_plugins.txt"))),
            ad_hosts=HostSuffixSet(load_pattern_file(data_file("ad_hosts.txt"))),
            accessory_extensions=frozenset(
                load_pattern_file(data_file("accessory_extensions.txt"))
            ),
        )
