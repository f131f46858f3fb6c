#!/usr/bin/env python3
"""Cross-validated comparison of classifier feature subsets.

Runs stratified 10-fold cross-validation, averaged over independent
runs, for each feature subset on a labeled corpus (the shipped seed
corpus by default).
"""

import argparse

from clickfeed.classifier import load_corpus
from clickfeed.harness import eval_classifier, subsets_table, subsets_tsv
from clickfeed.patterns import data_file

SUBSETS = [
    ("hostname_flag",),
    ("url_length",),
    ("url_length", "hostname_flag"),
    ("url_length", "periodicity_flag"),
    ("url_length", "hostname_flag", "freq_as_hostname", "rap_xcorr",
     "periodicity_flag"),
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", default=data_file("seed_corpus.tsv"))
    parser.add_argument("--folds", type=int, default=10)
    parser.add_argument("--runs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tsv", action="store_true")
    args = parser.parse_args()

    samples = load_corpus(args.corpus)
    reports = eval_classifier(samples, SUBSETS, folds=args.folds,
                              runs=args.runs, seed=args.seed)
    render = subsets_tsv if args.tsv else subsets_table
    print(f"# {len(samples)} samples, {args.folds}-fold x {args.runs} runs")
    print(render(reports), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
