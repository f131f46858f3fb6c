#!/usr/bin/env python3
"""Keyword-interest correlation within and across populations.

For each seed: generate two browsing populations over different page
catalogs, split the first population's users into disjoint halves, and
compare the Pearson correlation of half-vs-half keyword weights with
the correlation between the two unrelated populations. Shared catalog
and shared popularity ranking should make the halves agree; disjoint
catalogs share nothing.
"""

import argparse
import statistics

from clickfeed.analytics import keyword_popularity, pearson, split_populations
from clickfeed.synth import PopulationSpec, generate_population_views


def subset_keywords(pages, views, users, population_id):
    counts: dict[str, int] = {}
    for user, url in views:
        if user in users:
            counts[url] = counts.get(url, 0) + 1
    rows = [(pages[url], count) for url, count in counts.items()]
    return keyword_popularity(rows, population_id)


def seed_measurement(seed: int) -> tuple[float, float]:
    city = PopulationSpec(catalog_id="city-a", seed=seed)
    town = PopulationSpec(catalog_id="town-b", seed=seed + 1000)
    city_pages, city_views = generate_population_views(city)
    town_pages, town_views = generate_population_views(town)

    half_size = city.n_users // 2
    first, second = split_populations(
        [user for user, _ in city_views], 2, half_size, seed)
    within = pearson(
        subset_keywords(city_pages, city_views, first, "city-a/1"),
        subset_keywords(city_pages, city_views, second, "city-a/2"))
    across = pearson(
        subset_keywords(city_pages, city_views, first | second, "city-a"),
        subset_keywords(town_pages, town_views,
                        {user for user, _ in town_views}, "town-b"))
    return within, across


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    args = parser.parse_args()

    withins, acrosses = [], []
    print("seed\twithin_population\tacross_catalogs")
    for seed in range(args.seeds):
        within, across = seed_measurement(seed)
        withins.append(within)
        acrosses.append(across)
        print(f"{seed}\t{within:.4f}\t{across:.4f}")
    print(f"mean\t{statistics.mean(withins):.4f}"
          f"\t{statistics.mean(acrosses):.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
