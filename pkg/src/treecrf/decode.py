"""Exact max-product decoding, MBR over marginals, and the greedy fast path.

Same span items as the inside module with log-sum-exp replaced by max plus
backpointers.  Ties break toward the smaller split point (numpy argmax takes
the first maximum and candidates are laid out in ascending split order), then
the smaller root word, so decoding is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    NEG_INF,
    ArcScores,
    DepTree,
    RootPolicy,
    SibScores,
    is_legal_tree,
    is_projective,
)
from .inference import Marginals


@dataclass
class DecodeResult:
    tree: DepTree
    score: float
    used_fast_path: bool = False


def _first_order_charts(vals: np.ndarray):
    """Max-product tables for an arbitrary (n+1)x(n+1) value matrix."""
    n = vals.shape[0] - 1
    inc = np.full((n + 1, n + 1), NEG_INF)
    com = np.full((n + 1, n + 1), NEG_INF)
    np.fill_diagonal(com, 0.0)
    bp_inc = np.zeros((n + 1, n + 1), dtype=np.int64)
    bp_com = np.zeros((n + 1, n + 1), dtype=np.int64)
    for w in range(1, n + 1):
        i = np.arange(n + 1 - w)
        j = i + w
        m = np.arange(w)
        pair = com[i[:, None], i[:, None] + m] + com[j[:, None], i[:, None] + 1 + m]
        split = np.argmax(pair, axis=1)
        best = pair[np.arange(len(i)), split]
        inc[i, j] = best + vals[i, j]
        inc[j, i] = best + vals[j, i]
        bp_inc[i, j] = i + split
        bp_inc[j, i] = i + split
        mc = np.arange(1, w + 1)
        right = inc[i[:, None], i[:, None] + mc] + com[i[:, None] + mc, j[:, None]]
        split = np.argmax(right, axis=1)
        com[i, j] = right[np.arange(len(i)), split]
        bp_com[i, j] = i + 1 + split
        left = inc[j[:, None], i[:, None] + m] + com[i[:, None] + m, i[:, None]]
        split = np.argmax(left, axis=1)
        com[j, i] = left[np.arange(len(i)), split]
        bp_com[j, i] = i + split
    return inc, com, bp_inc, bp_com


def _backtrack_first_order(heads, bp_inc, bp_com, kind, a, b):
    stack = [(kind, a, b)]
    while stack:
        kind, a, b = stack.pop()
        if kind == "cr":
            if a == b:
                continue
            r = bp_com[a, b]
            stack.append(("ir", a, r))
            stack.append(("cr", r, b))
        elif kind == "cl":
            if a == b:
                continue
            r = bp_com[a, b]
            stack.append(("il", a, r))
            stack.append(("cl", r, b))
        elif kind == "ir":
            heads[b - 1] = a
            r = bp_inc[a, b]
            stack.append(("cr", a, r))
            stack.append(("cl", b, r + 1))
        else:  # il: arc a -> b with b < a
            heads[b - 1] = a
            r = bp_inc[a, b]
            stack.append(("cr", b, r))
            stack.append(("cl", a, r + 1))


def _decode_matrix(vals: np.ndarray, root_policy: RootPolicy) -> tuple[list[int], float]:
    n = vals.shape[0] - 1
    vals = np.array(vals, dtype=np.float64)
    np.fill_diagonal(vals, NEG_INF)
    vals[:, 0] = NEG_INF
    inc, com, bp_inc, bp_com = _first_order_charts(vals)
    heads = [0] * n
    if root_policy is RootPolicy.MULTI:
        score = float(com[0, n])
        _backtrack_first_order(heads, bp_inc, bp_com, "cr", 0, n)
        return heads, score
    cand = vals[0, 1:] + com[1:, 1] + com[np.arange(1, n + 1), n]
    root = int(np.argmax(cand)) + 1
    heads[root - 1] = 0
    _backtrack_first_order(heads, bp_inc, bp_com, "cl", root, 1)
    _backtrack_first_order(heads, bp_inc, bp_com, "cr", root, n)
    return heads, float(cand[root - 1])


def eisner1(arcs: ArcScores, root_policy: RootPolicy = RootPolicy.SINGLE) -> DecodeResult:
    """Highest-scoring projective tree under arc-factored scores, O(n^3)."""
    heads, score = _decode_matrix(arcs.values, root_policy)
    return DecodeResult(DepTree(tuple(heads)), score)


def mbr_decode(marg: Marginals, root_policy: RootPolicy = RootPolicy.SINGLE) -> DecodeResult:
    """Tree maximizing the sum of arc posteriors (probabilities, not logs)."""
    heads, score = _decode_matrix(marg.arc, root_policy)
    return DecodeResult(DepTree(tuple(heads)), score)


# second-order incomplete-item backpointer code for "first modifier"
_FIRST_MOD = -1


def eisner2(
    arcs: ArcScores, sibs: SibScores, root_policy: RootPolicy = RootPolicy.SINGLE
) -> DecodeResult:
    """Highest-scoring projective tree under arc + adjacent-sibling scores."""
    if arcs.n != sibs.n:
        raise ValueError("arc and sibling scores disagree on sentence length")
    n = arcs.n
    s = arcs.values
    t = sibs.values
    inc = np.full((n + 1, n + 1), NEG_INF)
    sib = np.full((n + 1, n + 1), NEG_INF)
    com = np.full((n + 1, n + 1), NEG_INF)
    np.fill_diagonal(com, 0.0)
    bp_inc = np.zeros((n + 1, n + 1), dtype=np.int64)
    bp_sib = np.zeros((n + 1, n + 1), dtype=np.int64)
    bp_com = np.zeros((n + 1, n + 1), dtype=np.int64)

    for w in range(1, n + 1):
        i = np.arange(n + 1 - w)
        j = i + w
        k = np.arange(len(i))
        m = np.arange(w)
        pair = com[i[:, None], i[:, None] + m] + com[j[:, None], i[:, None] + 1 + m]
        split = np.argmax(pair, axis=1)
        sib_best = pair[k, split]
        if w > 1:
            mm = np.arange(1, w)
            chain_r = (
                inc[i[:, None], i[:, None] + mm]
                + sib[i[:, None] + mm, j[:, None]]
                + t[i[:, None], i[:, None] + mm, j[:, None]]
            )
            terms_r = np.concatenate(
                [com[j, i + 1][:, None], chain_r], axis=1
            )
            choice = np.argmax(terms_r, axis=1)
            inc[i, j] = terms_r[k, choice] + s[i, j]
            bp_inc[i, j] = np.where(choice == 0, _FIRST_MOD, i + choice)
            chain_l = (
                inc[j[:, None], i[:, None] + mm]
                + sib[i[:, None], i[:, None] + mm]
                + t[j[:, None], i[:, None] + mm, i[:, None]]
            )
            terms_l = np.concatenate(
                [com[i, j - 1][:, None], chain_l], axis=1
            )
            choice = np.argmax(terms_l, axis=1)
            inc[j, i] = terms_l[k, choice] + s[j, i]
            bp_inc[j, i] = np.where(choice == 0, _FIRST_MOD, i + choice)
        else:
            inc[i, j] = com[j, i + 1] + s[i, j]
            inc[j, i] = com[i, j - 1] + s[j, i]
            bp_inc[i, j] = _FIRST_MOD
            bp_inc[j, i] = _FIRST_MOD
        sib[i, j] = sib_best
        bp_sib[i, j] = i + split
        mc = np.arange(1, w + 1)
        right = inc[i[:, None], i[:, None] + mc] + com[i[:, None] + mc, j[:, None]]
        split = np.argmax(right, axis=1)
        com[i, j] = right[k, split]
        bp_com[i, j] = i + 1 + split
        left = inc[j[:, None], i[:, None] + m] + com[i[:, None] + m, i[:, None]]
        split = np.argmax(left, axis=1)
        com[j, i] = left[k, split]
        bp_com[j, i] = i + split

    heads = [0] * n
    stack: list[tuple[str, int, int]] = []
    if root_policy is RootPolicy.MULTI:
        score = float(com[0, n])
        stack.append(("cr", 0, n))
    else:
        cand = s[0, 1:] + com[1:, 1] + com[np.arange(1, n + 1), n]
        root = int(np.argmax(cand)) + 1
        score = float(cand[root - 1])
        heads[root - 1] = 0
        stack.append(("cl", root, 1))
        stack.append(("cr", root, n))

    while stack:
        kind, a, b = stack.pop()
        if kind == "cr":
            if a == b:
                continue
            r = bp_com[a, b]
            stack.append(("ir", a, r))
            stack.append(("cr", r, b))
        elif kind == "cl":
            if a == b:
                continue
            r = bp_com[a, b]
            stack.append(("il", a, r))
            stack.append(("cl", r, b))
        elif kind == "ir":
            heads[b - 1] = a
            r = bp_inc[a, b]
            if r == _FIRST_MOD:
                stack.append(("cl", b, a + 1))
            else:
                stack.append(("ir", a, r))
                stack.append(("s", r, b))
        elif kind == "il":
            heads[b - 1] = a
            r = bp_inc[a, b]
            if r == _FIRST_MOD:
                stack.append(("cr", b, a - 1))
            else:
                stack.append(("il", a, r))
                stack.append(("s", b, r))
        else:  # sibling span (a, b), a < b
            r = bp_sib[a, b]
            stack.append(("cr", a, r))
            stack.append(("cl", b, r + 1))

    return DecodeResult(DepTree(tuple(heads)), score)


def greedy_fast_path(
    values: np.ndarray, root_policy: RootPolicy = RootPolicy.SINGLE
) -> DepTree | None:
    """Per-word argmax head assignment, returned only if it already forms a
    legal projective tree; None means the caller must run full decoding."""
    vals = np.array(values, dtype=np.float64)
    n = vals.shape[0] - 1
    np.fill_diagonal(vals, NEG_INF)
    heads = np.argmax(vals[:, 1:], axis=0)
    if not is_legal_tree(heads, root_policy):
        return None
    tree = DepTree(tuple(int(h) for h in heads))
    if not is_projective(tree):
        return None
    return tree
