"""Synthetic treebank for overfit sanity runs and demos.

Every token is globally unique, so a lookup-table encoder can in principle
fit any assignment of projective trees; failures to reach 100% training
accuracy then indicate broken gradient flow rather than a hard dataset.
"""

from __future__ import annotations

import numpy as np

from .core import RootPolicy, enumerate_projective_trees
from .treebank import ConllSentence, ConllToken


def make_toy_treebank(
    n_sentences: int = 50,
    min_len: int = 3,
    max_len: int = 8,
    n_labels: int = 4,
    seed: int = 1,
    root_policy: RootPolicy = RootPolicy.SINGLE,
) -> list[ConllSentence]:
    if not 1 <= min_len <= max_len <= 8:
        raise ValueError("toy sentence lengths must satisfy 1 <= min <= max <= 8")
    rng = np.random.default_rng(seed)
    labels = [f"L{i}" for i in range(n_labels)]
    sentences = []
    counter = 0
    for _ in range(n_sentences):
        n = int(rng.integers(min_len, max_len + 1))
        trees = enumerate_projective_trees(n, root_policy)
        tree = trees[int(rng.integers(0, len(trees)))]
        tokens = []
        for j in range(1, n + 1):
            counter += 1
            tokens.append(
                ConllToken(
                    index=j,
                    form=f"w{counter:04d}",
                    lemma="_",
                    upos="X",
                    xpos="_",
                    feats="_",
                    head=tree.heads[j - 1],
                    deprel=labels[int(rng.integers(0, n_labels))],
                    deps="_",
                    misc="_",
                )
            )
        sentences.append(ConllSentence(tokens))
    return sentences
