#!/usr/bin/env python3
"""End-to-end pipeline throughput on a generated trace.

Generates a trace of roughly the requested record count, replays it
through a full engine as fast as possible, and reports the sustained
rate and peak memory. --records 4000000 reproduces the headline
measurement; the default stays CI-sized.
"""

import argparse
import tempfile

from clickfeed.harness import bench_throughput
from clickfeed.ingest import replay
from clickfeed.synth import SyntheticTraceSpec, generate_synthetic


def spec_for(records: int, seed: int) -> SyntheticTraceSpec:
    # one click yields ~8 records (click + 5 children + social + noise);
    # portals add periodic front-page traffic on top
    clicks = max(20, records // 8)
    return SyntheticTraceSpec(
        n_user_urls=max(10, clicks // 20),
        clicks_per_content_url="const:20",
        noise_per_click=1.0,
        portal_fraction=0.1,
        portal_clicks="const:200",
        n_users=max(50, records // 2000),
        duration=7 * 86400.0,
        seed=seed)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--records", type=int, default=200_000,
                        help="approximate trace size to generate")
    parser.add_argument("--trace", help="replay this trace instead of generating")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if args.trace:
        result = bench_throughput(args.trace)
    else:
        with tempfile.TemporaryDirectory() as workdir:
            trace, _ = generate_synthetic(spec_for(args.records, args.seed),
                                          workdir)
            actual = sum(1 for _ in replay(trace))
            print(f"# generated {actual} records")
            result = bench_throughput(trace)
    for key in ("records", "elapsed_seconds", "records_per_second",
                "requests_per_hour", "peak_memory_mb"):
        print(f"{key}\t{result[key]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
