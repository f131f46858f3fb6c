"""Trace file ingestion and ordered replay.

Trace format, version 1: one request per line, six tab-separated
columns (timestamp, user_id, url, referer, user_agent, dnt), "-" for an
absent referer, dnt rendered as 0/1. Probes flush records in batches,
so mild timestamp disorder is expected; replay() restores order inside
a bounded window instead of trusting the file.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass
from typing import Iterable, Iterator

from clickfeed.model import ClickfeedError, HttpRequestRecord

TRACE_FORMAT_VERSION = 1
ABSENT = "-"

#: out-of-order tolerance, seconds; matches the probe flush cadence
REORDER_WINDOW = 60.0


class TraceFormatError(ClickfeedError, ValueError):
    """Raised for traces of an unsupported format version."""


class TraceIOError(ClickfeedError, IOError):
    """Terminal replay failure: the underlying stream broke mid-read."""


@dataclass
class ReplayStats:
    parsed: int = 0
    skipped: int = 0


def parse_record(line: str, stats: ReplayStats | None = None) -> HttpRequestRecord | None:
    """Parse one trace line; None (and a counted skip) if mandatory fields are missing."""
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 6:
        if stats:
            stats.skipped += 1
        return None
    ts_text, user_id, url, referer, user_agent, dnt_text = parts
    if not ts_text or not user_id or not url:
        if stats:
            stats.skipped += 1
        return None
    try:
        timestamp = float(ts_text)
    except ValueError:
        if stats:
            stats.skipped += 1
        return None
    if stats:
        stats.parsed += 1
    return HttpRequestRecord(
        timestamp=timestamp,
        user_id=user_id,
        url=url,
        referer=None if referer in (ABSENT, "") else referer,
        user_agent=user_agent,
        dnt=dnt_text == "1",
    )


def format_record(record: HttpRequestRecord) -> str:
    referer = record.referer if record.referer is not None else ABSENT
    return "\t".join([
        f"{record.timestamp:.3f}",
        record.user_id,
        record.url,
        referer,
        record.user_agent,
        "1" if record.dnt else "0",
    ])


def write_trace(records: Iterable[HttpRequestRecord], path: str) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(format_record(record) + "\n")
            count += 1
    return count


def _reordered(records: Iterable[HttpRequestRecord],
               window: float) -> Iterator[HttpRequestRecord]:
    """Release records in timestamp order, buffering up to `window` seconds."""
    heap: list[tuple[float, int, HttpRequestRecord]] = []
    seq = 0
    high = float("-inf")
    for record in records:
        heapq.heappush(heap, (record.timestamp, seq, record))
        seq += 1
        high = max(high, record.timestamp)
        while heap and heap[0][0] <= high - window:
            yield heapq.heappop(heap)[2]
    while heap:
        yield heapq.heappop(heap)[2]


def replay(path: str, speed: float = 0.0, stats: ReplayStats | None = None,
           format_version: int = TRACE_FORMAT_VERSION,
           reorder_window: float = REORDER_WINDOW,
           _sleep=time.sleep, _clock=time.monotonic) -> Iterator[HttpRequestRecord]:
    """Stream a trace file as HttpRequestRecord values in timestamp order.

    speed 0 replays as fast as possible; speed s > 0 paces delivery so
    that trace time advances s times faster than wall time (s=1 is
    real-time). Malformed lines are counted in `stats` and skipped.
    """
    if format_version != TRACE_FORMAT_VERSION:
        raise TraceFormatError(f"unsupported trace format version {format_version}")
    if speed < 0:
        raise ValueError("speed must be >= 0")

    def parsed_lines() -> Iterator[HttpRequestRecord]:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                for line in handle:
                    record = parse_record(line, stats)
                    if record is not None:
                        yield record
        except OSError as exc:
            raise TraceIOError(f"trace read failed: {exc}") from exc

    ordered = _reordered(parsed_lines(), reorder_window)
    if speed == 0:
        yield from ordered
        return

    first_ts: float | None = None
    start_wall: float | None = None
    for record in ordered:
        if first_ts is None:
            first_ts = record.timestamp
            start_wall = _clock()
        else:
            target = start_wall + (record.timestamp - first_ts) / speed
            delay = target - _clock()
            if delay > 0:
                _sleep(delay)
        yield record
