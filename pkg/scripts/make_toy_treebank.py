#!/usr/bin/env python3
"""Generate a synthetic projective treebank in CoNLL format."""

import argparse

from treecrf.core import RootPolicy
from treecrf.toy import make_toy_treebank
from treecrf.treebank import write_conll


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sentences", type=int, default=50)
    parser.add_argument("--min-len", type=int, default=3)
    parser.add_argument("--max-len", type=int, default=8)
    parser.add_argument("--labels", type=int, default=4)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--root-policy", choices=("single", "multi"), default="single")
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    sents = make_toy_treebank(
        n_sentences=args.sentences,
        min_len=args.min_len,
        max_len=args.max_len,
        n_labels=args.labels,
        seed=args.seed,
        root_policy=RootPolicy(args.root_policy),
    )
    write_conll(args.out, sents)
    print(f"wrote {len(sents)} sentences to {args.out}")


if __name__ == "__main__":
    main()
