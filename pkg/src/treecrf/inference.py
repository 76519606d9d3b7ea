"""Batched log-space inside algorithms and marginals via reverse-mode adjoints.

Chart layout: each table is (B, n_max+1, n_max+1); cell (i, j) with i < j
holds the rightward item over span i..j (head at i), cell (j, i) the mirrored
leftward item (head at j).  The diagonal of the complete table is the zero
initialiser.  The width loop packs all same-width spans of all sentences into
single tensor operations, so cost is O(n) python-level iterations regardless
of batch size.

Second-order recurrences over incomplete (I), sibling (S) and complete (C)
spans, rightward direction (leftward is the mirror image):

    I[i,j] = log( e^{C[j,i+1]} + sum_{i<r<j} e^{I[i,r] + S[r,j] + sib(i,r,j)} ) + arc(i,j)
    S[i,j] = log sum_{i<=r<j} e^{C[i,r] + C[j,r+1]}
    C[i,j] = log sum_{i<r<=j} e^{I[i,r] + C[r,j]}

Dropping the sibling chain (every I reduces to the S-style split) gives the
first-order recurrences.  Marginals are the adjoints of log Z with respect to
the score entries; the backward pass replays each aggregation in reverse
width order and scatters softmax-weighted adjoints -- no outside pass exists
anywhere in this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import NEG_INF, ArcScores, PartialTree, RootPolicy, SibScores

# Values below this are treated as "log of zero" in results (e.g. a
# constrained partition with no compatible tree).
INFEASIBLE_CUTOFF = -1e15


@dataclass
class ChartSet:
    """Retained I/S/C tables plus per-sentence lengths, for adjoint replay."""

    incomplete: np.ndarray
    sibling: np.ndarray | None
    complete: np.ndarray
    lengths: np.ndarray


@dataclass
class InsideResult:
    log_partition: np.ndarray  # (B,)
    charts: ChartSet


@dataclass
class Marginals:
    """Arc (and optionally sibling) posterior probabilities for one sentence."""

    arc: np.ndarray
    sib: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.arc.shape[0] - 1


def _lse(x: np.ndarray) -> np.ndarray:
    """log-sum-exp over the last axis with max subtraction (mandatory here:
    raw exponentials overflow once chart values grow past ~700)."""
    m = np.max(x, axis=-1, keepdims=True)
    return np.squeeze(m, -1) + np.log(np.sum(np.exp(x - m), axis=-1))


def _softmax(x: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis; the sum is always >= 1 because the
    max term contributes exp(0)."""
    e = np.exp(x - np.max(x, axis=-1, keepdims=True))
    return e / np.sum(e, axis=-1, keepdims=True)


def _pack_scores(
    arcs: Sequence[ArcScores],
    sibs: Sequence[SibScores] | None,
    dtype=np.float64,
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray]:
    if len(arcs) == 0:
        raise ValueError("empty batch")
    lengths = np.array([a.n for a in arcs], dtype=np.int64)
    if sibs is not None:
        if len(sibs) != len(arcs):
            raise ValueError("arc/sibling batch length mismatch")
        for a, s in zip(arcs, sibs):
            if a.n != s.n:
                raise ValueError(
                    f"arc scores cover {a.n} words but sibling scores {s.n}"
                )
    nmax = int(lengths.max())
    batch = len(arcs)
    s_arc = np.full((batch, nmax + 1, nmax + 1), NEG_INF, dtype=dtype)
    for b, a in enumerate(arcs):
        s_arc[b, : a.n + 1, : a.n + 1] = a.values
    s_sib = None
    if sibs is not None:
        s_sib = np.full((batch, nmax + 1, nmax + 1, nmax + 1), NEG_INF, dtype=dtype)
        for b, s in enumerate(sibs):
            s_sib[b, : s.n + 1, : s.n + 1, : s.n + 1] = s.values
    return s_arc, s_sib, lengths


def _forward(
    s_arc: np.ndarray,
    s_sib: np.ndarray | None,
    lengths: np.ndarray,
    root_policy: RootPolicy,
) -> tuple[np.ndarray, ChartSet]:
    batch, n1, _ = s_arc.shape
    nmax = n1 - 1
    inc = np.full((batch, n1, n1), NEG_INF, dtype=s_arc.dtype)
    com = np.full_like(inc, NEG_INF)
    diag = np.arange(n1)
    com[:, diag, diag] = 0.0
    sib = None if s_sib is None else np.full_like(inc, NEG_INF)

    for w in range(1, nmax + 1):
        i = np.arange(n1 - w)
        j = i + w
        m = np.arange(w)  # splits r = i + m
        cr = com[:, i[:, None], i[:, None] + m]          # C[i, r]
        cl = com[:, j[:, None], i[:, None] + 1 + m]      # C[j, r+1]
        pair = cr + cl
        if s_sib is None:
            interior = _lse(pair)
            inc[:, i, j] = interior + s_arc[:, i, j]
            inc[:, j, i] = interior + s_arc[:, j, i]
        else:
            right0 = com[:, j, i + 1]  # j is the first modifier of i
            left0 = com[:, i, j - 1]   # i is the first modifier of j
            if w > 1:
                mm = np.arange(1, w)  # chain splits through the previous sibling
                chain_r = (
                    inc[:, i[:, None], i[:, None] + mm]
                    + sib[:, i[:, None] + mm, j[:, None]]
                    + s_sib[:, i[:, None], i[:, None] + mm, j[:, None]]
                )
                chain_l = (
                    inc[:, j[:, None], i[:, None] + mm]
                    + sib[:, i[:, None], i[:, None] + mm]
                    + s_sib[:, j[:, None], i[:, None] + mm, i[:, None]]
                )
                inc[:, i, j] = (
                    _lse(np.concatenate([right0[:, :, None], chain_r], axis=2))
                    + s_arc[:, i, j]
                )
                inc[:, j, i] = (
                    _lse(np.concatenate([left0[:, :, None], chain_l], axis=2))
                    + s_arc[:, j, i]
                )
            else:
                inc[:, i, j] = right0 + s_arc[:, i, j]
                inc[:, j, i] = left0 + s_arc[:, j, i]
            sib[:, i, j] = _lse(pair)
        mc = np.arange(1, w + 1)  # final-modifier splits r = i + mc
        com[:, i, j] = _lse(
            inc[:, i[:, None], i[:, None] + mc] + com[:, i[:, None] + mc, j[:, None]]
        )
        com[:, j, i] = _lse(
            inc[:, j[:, None], i[:, None] + m] + com[:, i[:, None] + m, i[:, None]]
        )

    charts = ChartSet(inc, sib, com, lengths)
    return _readout(s_arc, com, lengths, root_policy), charts


def _root_candidates(
    s_arc: np.ndarray, com: np.ndarray, lengths: np.ndarray
) -> np.ndarray:
    """Per-root-word totals s(0,r) + C_left[r,1] + C_right[r,n], padded NEG_INF."""
    batch, n1, _ = s_arc.shape
    bi = np.arange(batch)
    r = np.arange(1, n1)
    vals = (
        s_arc[:, 0, 1:]
        + com[:, 1:, 1]
        + com[bi[:, None], r[None, :], lengths[:, None]]
    )
    return np.where(r[None, :] <= lengths[:, None], vals, NEG_INF)


def _readout(
    s_arc: np.ndarray,
    com: np.ndarray,
    lengths: np.ndarray,
    root_policy: RootPolicy,
) -> np.ndarray:
    bi = np.arange(com.shape[0])
    if root_policy is RootPolicy.MULTI:
        return com[bi, 0, lengths].copy()
    return _lse(_root_candidates(s_arc, com, lengths))


def _backward(
    charts: ChartSet,
    s_arc: np.ndarray,
    s_sib: np.ndarray | None,
    root_policy: RootPolicy,
    seed: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Adjoints of log Z w.r.t. every arc (and sibling) score.

    Replays each forward aggregation in reverse width order; the adjoint of a
    log-sum-exp is a softmax-weighted scatter onto its inputs.  Weights are
    recomputed from the retained child tables (never from the parent value)
    so sentinel-heavy groups stay NaN-free; cells never on a path to the
    readout keep exactly-zero adjoints throughout.

    Within one width, C adjoints are finalised first (C consumes same-width
    I items), then I, then S.
    """
    inc, sib, com, lengths = (
        charts.incomplete,
        charts.sibling,
        charts.complete,
        charts.lengths,
    )
    batch, n1, _ = inc.shape
    nmax = n1 - 1
    bi = np.arange(batch)
    if seed is None:
        seed = np.ones(batch, dtype=s_arc.dtype)

    a_inc = np.zeros_like(inc)
    a_com = np.zeros_like(com)
    a_sib = np.zeros_like(sib) if sib is not None else None
    g_arc = np.zeros_like(s_arc)
    g_sib = np.zeros_like(s_sib) if s_sib is not None else None

    if root_policy is RootPolicy.MULTI:
        a_com[bi, 0, lengths] += seed
    else:
        r = np.arange(1, n1)
        vals = _root_candidates(s_arc, com, lengths)
        wts = _softmax(vals) * seed[:, None]
        wts = np.where(r[None, :] <= lengths[:, None], wts, 0.0)
        g_arc[:, 0, 1:] += wts
        a_com[:, 1:, 1] += wts
        a_com[bi[:, None], r[None, :], lengths[:, None]] += wts

    for w in range(nmax, 0, -1):
        i = np.arange(n1 - w)
        j = i + w
        m = np.arange(w)
        mc = np.arange(1, w + 1)

        # complete spans
        g = a_com[:, i, j][:, :, None]
        child_i = inc[:, i[:, None], i[:, None] + mc]
        child_c = com[:, i[:, None] + mc, j[:, None]]
        wts = _softmax(child_i + child_c) * g
        a_inc[:, i[:, None], i[:, None] + mc] += wts
        a_com[:, i[:, None] + mc, j[:, None]] += wts

        g = a_com[:, j, i][:, :, None]
        child_i = inc[:, j[:, None], i[:, None] + m]
        child_c = com[:, i[:, None] + m, i[:, None]]
        wts = _softmax(child_i + child_c) * g
        a_inc[:, j[:, None], i[:, None] + m] += wts
        a_com[:, i[:, None] + m, i[:, None]] += wts

        # incomplete spans (their own adjoints are final now)
        gr = a_inc[:, i, j]
        gl = a_inc[:, j, i]
        g_arc[:, i, j] += gr
        g_arc[:, j, i] += gl
        if s_sib is None:
            cr = com[:, i[:, None], i[:, None] + m]
            cl = com[:, j[:, None], i[:, None] + 1 + m]
            wts = _softmax(cr + cl) * (gr + gl)[:, :, None]
            a_com[:, i[:, None], i[:, None] + m] += wts
            a_com[:, j[:, None], i[:, None] + 1 + m] += wts
        else:
            if w > 1:
                mm = np.arange(1, w)
                right0 = com[:, j, i + 1]
                chain_r = (
                    inc[:, i[:, None], i[:, None] + mm]
                    + sib[:, i[:, None] + mm, j[:, None]]
                    + s_sib[:, i[:, None], i[:, None] + mm, j[:, None]]
                )
                wts = _softmax(
                    np.concatenate([right0[:, :, None], chain_r], axis=2)
                ) * gr[:, :, None]
                a_com[:, j, i + 1] += wts[:, :, 0]
                a_inc[:, i[:, None], i[:, None] + mm] += wts[:, :, 1:]
                a_sib[:, i[:, None] + mm, j[:, None]] += wts[:, :, 1:]
                g_sib[:, i[:, None], i[:, None] + mm, j[:, None]] += wts[:, :, 1:]

                left0 = com[:, i, j - 1]
                chain_l = (
                    inc[:, j[:, None], i[:, None] + mm]
                    + sib[:, i[:, None], i[:, None] + mm]
                    + s_sib[:, j[:, None], i[:, None] + mm, i[:, None]]
                )
                wts = _softmax(
                    np.concatenate([left0[:, :, None], chain_l], axis=2)
                ) * gl[:, :, None]
                a_com[:, i, j - 1] += wts[:, :, 0]
                a_inc[:, j[:, None], i[:, None] + mm] += wts[:, :, 1:]
                a_sib[:, i[:, None], i[:, None] + mm] += wts[:, :, 1:]
                g_sib[:, j[:, None], i[:, None] + mm, i[:, None]] += wts[:, :, 1:]
            else:
                a_com[:, j, i + 1] += gr  # lands on the diagonal: discarded
                a_com[:, i, j - 1] += gl

            # sibling spans
            gs = a_sib[:, i, j][:, :, None]
            cr = com[:, i[:, None], i[:, None] + m]
            cl = com[:, j[:, None], i[:, None] + 1 + m]
            wts = _softmax(cr + cl) * gs
            a_com[:, i[:, None], i[:, None] + m] += wts
            a_com[:, j[:, None], i[:, None] + 1 + m] += wts

    return g_arc, g_sib


def inside_first_order(
    batch: Sequence[ArcScores],
    root_policy: RootPolicy = RootPolicy.SINGLE,
    dtype=np.float64,
) -> InsideResult:
    """log Z(x) over projective trees under arc-factored scores, batched."""
    s_arc, _, lengths = _pack_scores(batch, None, dtype)
    log_z, charts = _forward(s_arc, None, lengths, root_policy)
    return InsideResult(log_z, charts)


def inside_second_order(
    batch: Sequence[tuple[ArcScores, SibScores]],
    root_policy: RootPolicy = RootPolicy.SINGLE,
    dtype=np.float64,
) -> InsideResult:
    """log Z(x) with arc plus adjacent-sibling scores, batched."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    arcs = [a for a, _ in batch]
    sibs = [s for _, s in batch]
    s_arc, s_sib, lengths = _pack_scores(arcs, sibs, dtype)
    log_z, charts = _forward(s_arc, s_sib, lengths, root_policy)
    return InsideResult(log_z, charts)


def marginals_batch(
    arcs: Sequence[ArcScores],
    sibs: Sequence[SibScores] | None = None,
    root_policy: RootPolicy = RootPolicy.SINGLE,
) -> list[Marginals]:
    """Arc (and sibling) posteriors for every sentence of a batch."""
    s_arc, s_sib, lengths = _pack_scores(arcs, sibs)
    log_z, charts = _forward(s_arc, s_sib, lengths, root_policy)
    if np.any(log_z < INFEASIBLE_CUTOFF):
        raise ValueError("no tree has finite score; marginals undefined")
    g_arc, g_sib = _backward(charts, s_arc, s_sib, root_policy)
    out = []
    for b, n in enumerate(lengths):
        arc_m = g_arc[b, : n + 1, : n + 1].copy()
        sib_m = None if g_sib is None else g_sib[b, : n + 1, : n + 1, : n + 1].copy()
        out.append(Marginals(arc_m, sib_m))
    return out


def marginals(
    arcs: ArcScores,
    sibs: SibScores | None = None,
    root_policy: RootPolicy = RootPolicy.SINGLE,
) -> Marginals:
    """Posterior p(i -> j | x) (and sibling posteriors when sibs are given).

    Each entry is the adjoint of log Z with respect to the corresponding
    score, accumulated by reverse replay of the inside recurrences.
    """
    return marginals_batch([arcs], None if sibs is None else [sibs], root_policy)[0]


def masked_arc_scores(arcs: ArcScores, partial: PartialTree) -> ArcScores:
    """Arc scores with every arc contradicting an annotated head disabled."""
    if partial.n != arcs.n:
        raise ValueError(f"partial tree has {partial.n} words, scores {arcs.n}")
    vals = arcs.values.copy()
    for h, j in partial.annotated:
        keep = vals[h, j]
        vals[:, j] = NEG_INF
        vals[h, j] = keep
    # Bypass the constructor finiteness check: masked columns are meant to
    # carry the sentinel.
    out = ArcScores.__new__(ArcScores)
    vals.flags.writeable = False
    out.values = vals
    return out


def constrained_inside(
    arcs: ArcScores,
    sibs: SibScores | None,
    partial: PartialTree,
    root_policy: RootPolicy = RootPolicy.SINGLE,
) -> float:
    """log Z(x, partial): partition restricted to trees containing every
    annotated arc.  Returns -inf when no projective tree is compatible
    (non-projective or root-policy-violating annotation)."""
    masked = masked_arc_scores(arcs, partial)
    if sibs is None:
        result = inside_first_order([masked], root_policy)
    else:
        result = inside_second_order([(masked, sibs)], root_policy)
    value = float(result.log_partition[0])
    if value < INFEASIBLE_CUTOFF:
        return float("-inf")
    return value


def inside_first_order_naive(
    arcs: ArcScores, root_policy: RootPolicy = RootPolicy.SINGLE
) -> float:
    """Unbatched, loop-everything first-order inside; the per-sentence
    reference the batched version is benchmarked against."""
    n = arcs.n
    s = arcs.values

    def lse(values):
        m = max(values)
        return m + math.log(sum(math.exp(v - m) for v in values))

    inc = [[NEG_INF] * (n + 1) for _ in range(n + 1)]
    com = [[NEG_INF] * (n + 1) for _ in range(n + 1)]
    for d in range(n + 1):
        com[d][d] = 0.0
    for w in range(1, n + 1):
        for i in range(n + 1 - w):
            j = i + w
            interior = lse([com[i][r] + com[j][r + 1] for r in range(i, j)])
            inc[i][j] = interior + s[i, j]
            inc[j][i] = interior + s[j, i]
            com[i][j] = lse([inc[i][r] + com[r][j] for r in range(i + 1, j + 1)])
            com[j][i] = lse([inc[j][r] + com[r][i] for r in range(i, j)])
    if root_policy is RootPolicy.MULTI:
        return com[0][n]
    return lse([s[0, r] + com[r][1] + com[r][n] for r in range(1, n + 1)])
