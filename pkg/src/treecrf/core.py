"""Tree types, legality predicates, tree scoring, and the enumeration oracle.

Positions follow the pseudo-root convention: position 0 is the artificial
root token, words occupy 1..n, and ``heads[j - 1]`` is the head of word j.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

# Finite stand-in for log(0).  Large enough that exp(NEG_INF - x) == 0.0 for
# any realistic score x, small enough that chains of additions stay finite.
NEG_INF = -1e18

# Head sentinel for unannotated words in partial trees.
UNKNOWN = -1

# Hard cap for exhaustive tree enumeration.
MAX_ENUM_N = 8


class RootPolicy(Enum):
    """Whether the pseudo-root may take one dependent or several."""

    SINGLE = "single"
    MULTI = "multi"


@dataclass(frozen=True)
class DepTree:
    """A complete head assignment, optionally labelled.

    ``heads[j - 1]`` in [0, n] is the head of word j.  Structural legality is
    checked by the predicates below, not at construction, so that candidate
    assignments (e.g. greedy head picks) can be represented before screening.
    """

    heads: tuple[int, ...]
    labels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        heads = tuple(int(h) for h in self.heads)
        object.__setattr__(self, "heads", heads)
        n = len(heads)
        if n == 0:
            raise ValueError("a tree needs at least one word")
        for j, h in enumerate(heads, start=1):
            if not 0 <= h <= n:
                raise ValueError(f"head of word {j} out of range: {h}")
        if self.labels is not None:
            labels = tuple(int(l) for l in self.labels)
            object.__setattr__(self, "labels", labels)
            if len(labels) != n:
                raise ValueError("labels length must match heads length")

    @property
    def n(self) -> int:
        return len(self.heads)

    def arcs(self) -> list[tuple[int, int]]:
        """(head, modifier) pairs, modifiers in sentence order."""
        return [(h, j) for j, h in enumerate(self.heads, start=1)]


@dataclass(frozen=True)
class PartialTree:
    """A head assignment in which some words may be unannotated.

    Unannotated entries hold :data:`UNKNOWN`.  The annotated subset must be
    acyclic; anything subtler (projectivity, root arity) is the inference
    layer's problem and surfaces as an empty compatible set there.
    """

    heads: tuple[int, ...]

    def __post_init__(self) -> None:
        heads = tuple(int(h) for h in self.heads)
        object.__setattr__(self, "heads", heads)
        n = len(heads)
        if n == 0:
            raise ValueError("a partial tree needs at least one word")
        for j, h in enumerate(heads, start=1):
            if h != UNKNOWN and not 0 <= h <= n:
                raise ValueError(f"head of word {j} out of range: {h}")
        if _has_annotated_cycle(heads):
            raise ValueError("annotated arcs contain a cycle")

    @property
    def n(self) -> int:
        return len(self.heads)

    @property
    def annotated(self) -> list[tuple[int, int]]:
        """(head, modifier) pairs with a known head."""
        return [(h, j) for j, h in enumerate(self.heads, start=1) if h != UNKNOWN]

    def is_complete(self) -> bool:
        return all(h != UNKNOWN for h in self.heads)

    def to_tree(self) -> DepTree:
        if not self.is_complete():
            raise ValueError("partial tree has unannotated words")
        return DepTree(self.heads)


def _has_annotated_cycle(heads: Sequence[int]) -> bool:
    n = len(heads)
    # 0 = unseen, 1 = on current path, 2 = cleared.
    state = [0] * (n + 1)
    state[0] = 2
    for start in range(1, n + 1):
        if state[start]:
            continue
        path = [start]
        state[start] = 1
        node = start
        while True:
            h = heads[node - 1]
            if h == UNKNOWN or h == 0 or state[h] == 2:
                break
            if state[h] == 1:
                return True
            state[h] = 1
            path.append(h)
            node = h
        for p in path:
            state[p] = 2
    return False


class ArcScores:
    """Dense (n+1) x (n+1) matrix of first-order scores s(head, modifier).

    The diagonal and column 0 are structurally unused and are overwritten
    with the :data:`NEG_INF` sentinel at construction.  Instances are
    immutable after construction.
    """

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"arc scores must be square, got {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("arc scores need at least one word (shape >= 2x2)")
        n = arr.shape[0] - 1
        valid = valid_arc_mask(n)
        if not np.all(np.isfinite(arr[valid])):
            raise ValueError("arc scores must be finite on the valid region")
        arr[~valid] = NEG_INF
        arr.flags.writeable = False
        self.values = arr

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @classmethod
    def zeros(cls, n: int) -> "ArcScores":
        return cls(np.zeros((n + 1, n + 1)))


class SibScores:
    """Dense (n+1)^3 tensor of adjacent-sibling scores s(head, sib, modifier).

    Entry (i, k, j) is meaningful only when i < k < j or j < k < i (k is the
    sibling adjacent to modifier j on head i's side); everything else is
    masked to :data:`NEG_INF`.
    """

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 3 or len(set(arr.shape)) != 1:
            raise ValueError(f"sibling scores must be cubic, got {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError("sibling scores need at least one word")
        n = arr.shape[0] - 1
        valid = valid_sib_mask(n)
        if not np.all(np.isfinite(arr[valid])):
            raise ValueError("sibling scores must be finite on the valid region")
        arr[~valid] = NEG_INF
        arr.flags.writeable = False
        self.values = arr

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @classmethod
    def zeros(cls, n: int) -> "SibScores":
        return cls(np.zeros((n + 1, n + 1, n + 1)))


class LabelScores:
    """Per-arc label scores: (n+1) x (n+1) x |L| tensor."""

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"label scores must be (n+1, n+1, L), got {arr.shape}")
        n = arr.shape[0] - 1
        valid = valid_arc_mask(n)
        if not np.all(np.isfinite(arr[valid])):
            raise ValueError("label scores must be finite on the valid region")
        arr[~valid] = NEG_INF
        arr.flags.writeable = False
        self.values = arr

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @property
    def n_labels(self) -> int:
        return self.values.shape[2]


def valid_arc_mask(n: int) -> np.ndarray:
    """Boolean (n+1, n+1) mask of structurally possible arcs (i -> j, j >= 1)."""
    mask = np.ones((n + 1, n + 1), dtype=bool)
    np.fill_diagonal(mask, False)
    mask[:, 0] = False
    return mask


def valid_sib_mask(n: int) -> np.ndarray:
    """Boolean (n+1)^3 mask of well-formed (head, sib, modifier) triples."""
    i, k, j = np.ogrid[: n + 1, : n + 1, : n + 1]
    return ((i < k) & (k < j)) | ((j < k) & (k < i) & (j >= 1))


def is_legal_tree(heads: Sequence[int], root_policy: RootPolicy = RootPolicy.SINGLE) -> bool:
    """True iff ``heads`` forms a tree rooted at 0 under the root policy.

    Pure predicate: out-of-range entries yield False rather than raising.
    Runs in linear time (chain walking with colouring).
    """
    n = len(heads)
    if n == 0:
        return False
    for h in heads:
        if not 0 <= int(h) <= n:
            return False
    if root_policy is RootPolicy.SINGLE and sum(1 for h in heads if h == 0) != 1:
        return False
    # Colour nodes: 0 unseen, 1 on current path, 2 known to reach the root.
    state = [0] * (n + 1)
    state[0] = 2
    for start in range(1, n + 1):
        if state[start]:
            continue
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            node = int(heads[node - 1])
        if state[node] == 1:
            return False  # walked back into the current path: cycle
        for p in path:
            state[p] = 2
    return True


def _require_tree(tree: DepTree) -> None:
    if not is_legal_tree(tree.heads, RootPolicy.MULTI):
        raise ValueError(f"illegal tree: heads={tree.heads}")


def is_projective(tree: DepTree) -> bool:
    """True iff no two arcs cross, counting the arcs from the pseudo-root."""
    _require_tree(tree)
    arcs = [(min(h, j), max(h, j)) for h, j in tree.arcs()]
    for x in range(len(arcs)):
        a1, b1 = arcs[x]
        for y in range(x + 1, len(arcs)):
            a2, b2 = arcs[y]
            if a1 < a2 < b1 < b2 or a2 < a1 < b2 < b1:
                return False
    return True


def extract_sib_triples(tree: DepTree) -> set[tuple[int, int, int]]:
    """All (head, sib, modifier) triples of adjacent same-side modifiers.

    For right modifiers c1 < c2 of head i the triple is (i, c1, c2); for left
    modifiers c1 < c2 it is (i, c2, c1) -- the sibling slot is always the one
    nearer the head.
    """
    _require_tree(tree)
    children: dict[int, list[int]] = {}
    for h, j in tree.arcs():
        children.setdefault(h, []).append(j)
    triples: set[tuple[int, int, int]] = set()
    for head, mods in children.items():
        left = sorted(m for m in mods if m < head)
        right = sorted(m for m in mods if m > head)
        for k, j in zip(right, right[1:]):
            triples.add((head, k, j))
        for j, k in zip(left, left[1:]):
            triples.add((head, k, j))
    return triples


def tree_score(arcs: ArcScores, sibs: SibScores | None, tree: DepTree) -> float:
    """Total model score of a tree: arc scores plus adjacent-sibling scores."""
    if tree.n != arcs.n:
        raise ValueError(f"tree has {tree.n} words but scores cover {arcs.n}")
    if sibs is not None and sibs.n != arcs.n:
        raise ValueError("arc and sibling scores disagree on sentence length")
    _require_tree(tree)
    total = float(sum(arcs.values[h, j] for h, j in tree.arcs()))
    if sibs is not None:
        total += float(sum(sibs.values[i, k, j] for i, k, j in extract_sib_triples(tree)))
    return total


def enumerate_projective_trees(
    n: int, root_policy: RootPolicy = RootPolicy.SINGLE
) -> list[DepTree]:
    """Exhaustive, duplicate-free list of projective trees over n words.

    Enumerates span derivations directly (each projective tree has exactly
    one), so no dedup pass is needed.  Guarded to n <= MAX_ENUM_N; this is a
    test oracle, not a parser.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_ENUM_N:
        raise ValueError(f"enumeration is capped at n <= {MAX_ENUM_N}, got {n}")

    memo: dict[tuple[str, int, int], list[tuple]] = {}

    def com_right(i: int, j: int) -> list[tuple]:
        if i == j:
            return [()]
        key = ("cr", i, j)
        if key not in memo:
            memo[key] = [
                a + c
                for r in range(i + 1, j + 1)
                for a in inc_right(i, r)
                for c in com_right(r, j)
            ]
        return memo[key]

    def com_left(j: int, i: int) -> list[tuple]:
        if i == j:
            return [()]
        key = ("cl", i, j)
        if key not in memo:
            memo[key] = [
                a + c
                for r in range(i, j)
                for a in inc_left(j, r)
                for c in com_left(r, i)
            ]
        return memo[key]

    def inc_right(i: int, j: int) -> list[tuple]:
        key = ("ir", i, j)
        if key not in memo:
            memo[key] = [
                ((i, j),) + a + b
                for r in range(i, j)
                for a in com_right(i, r)
                for b in com_left(j, r + 1)
            ]
        return memo[key]

    def inc_left(j: int, i: int) -> list[tuple]:
        key = ("il", i, j)
        if key not in memo:
            memo[key] = [
                ((j, i),) + a + b
                for r in range(i, j)
                for a in com_right(i, r)
                for b in com_left(j, r + 1)
            ]
        return memo[key]

    if root_policy is RootPolicy.MULTI:
        derivations = com_right(0, n)
    else:
        derivations = [
            ((0, r),) + a + b
            for r in range(1, n + 1)
            for a in com_left(r, 1)
            for b in com_right(r, n)
        ]

    trees = []
    for arcs in derivations:
        heads = [0] * n
        for h, m in arcs:
            heads[m - 1] = h
        trees.append(DepTree(tuple(heads)))
    return trees
