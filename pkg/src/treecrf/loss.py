"""Training losses and their gradients with respect to the score tensors.

All CRF gradients fall out of the marginal identity: d(-log p)/d s  =
posterior - indicator, where the posterior side comes from the adjoint
backward pass of the inside module.  Values are per-instance here; the
*_batch variants sum values over a batch (losses are accumulated, never
averaged) while keeping per-sentence gradient arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    NEG_INF,
    ArcScores,
    DepTree,
    PartialTree,
    RootPolicy,
    SibScores,
    UNKNOWN,
    extract_sib_triples,
    is_legal_tree,
    is_projective,
    tree_score,
)
from .inference import (
    INFEASIBLE_CUTOFF,
    _backward,
    _forward,
    _pack_scores,
    masked_arc_scores,
)


@dataclass
class LossResult:
    value: float
    arc_grad: np.ndarray
    sib_grad: np.ndarray | None = None


def _gold_indicator(tree: DepTree, with_sibs: bool) -> tuple[np.ndarray, np.ndarray | None]:
    n = tree.n
    arc = np.zeros((n + 1, n + 1))
    for h, j in tree.arcs():
        arc[h, j] = 1.0
    sib = None
    if with_sibs:
        sib = np.zeros((n + 1, n + 1, n + 1))
        for i, k, j in extract_sib_triples(tree):
            sib[i, k, j] = 1.0
    return arc, sib


def _check_gold(tree: DepTree, n: int, root_policy: RootPolicy) -> None:
    if tree.n != n:
        raise ValueError(f"gold tree has {tree.n} words but scores cover {n}")
    if not is_legal_tree(tree.heads, root_policy):
        raise ValueError(f"gold tree illegal under {root_policy.value}-root policy")
    if not is_projective(tree):
        raise ValueError("gold tree is non-projective")


def crf_loss_batch(
    arcs: Sequence[ArcScores],
    sibs: Sequence[SibScores] | None,
    gold: Sequence[DepTree],
    root_policy: RootPolicy = RootPolicy.SINGLE,
) -> tuple[float, list[LossResult]]:
    """-log p(gold | x) summed over the batch, one engine pass."""
    for a, g in zip(arcs, gold):
        _check_gold(g, a.n, root_policy)
    s_arc, s_sib, lengths = _pack_scores(arcs, sibs)
    log_z, charts = _forward(s_arc, s_sib, lengths, root_policy)
    g_arc, g_sib = _backward(charts, s_arc, s_sib, root_policy)
    results = []
    total = 0.0
    for b, (a, g) in enumerate(zip(arcs, gold)):
        n = a.n
        gold_score = tree_score(a, None if sibs is None else sibs[b], g)
        value = float(log_z[b]) - gold_score
        ind_arc, ind_sib = _gold_indicator(g, with_sibs=sibs is not None)
        arc_grad = g_arc[b, : n + 1, : n + 1] - ind_arc
        sib_grad = None
        if sibs is not None:
            sib_grad = g_sib[b, : n + 1, : n + 1, : n + 1] - ind_sib
        results.append(LossResult(value, arc_grad, sib_grad))
        total += value
    return total, results


def crf_loss(
    arcs: ArcScores,
    sibs: SibScores | None,
    gold: DepTree,
    root_policy: RootPolicy = RootPolicy.SINGLE,
) -> LossResult:
    """Structured loss -s(x, gold) + log Z(x); gradients are posterior
    minus gold indicator on the valid cells."""
    _, results = crf_loss_batch(
        [arcs], None if sibs is None else [sibs], [gold], root_policy
    )
    return results[0]


def partial_crf_loss_batch(
    arcs: Sequence[ArcScores],
    sibs: Sequence[SibScores] | None,
    partials: Sequence[PartialTree],
    root_policy: RootPolicy = RootPolicy.SINGLE,
) -> tuple[float, list[LossResult]]:
    """-log [Z(x, partial) / Z(x)] summed over the batch: two engine passes,
    one over the raw scores and one over the constraint-masked scores."""
    masked = [masked_arc_scores(a, p) for a, p in zip(arcs, partials)]
    s_arc, s_sib, lengths = _pack_scores(arcs, sibs)
    m_arc, m_sib, _ = _pack_scores(masked, sibs)
    log_z, charts = _forward(s_arc, s_sib, lengths, root_policy)
    log_zc, charts_c = _forward(m_arc, m_sib, lengths, root_policy)
    if np.any(log_zc < INFEASIBLE_CUTOFF):
        bad = int(np.argmax(log_zc < INFEASIBLE_CUTOFF))
        raise ValueError(
            f"no projective tree is compatible with the partial annotation "
            f"of batch item {bad}"
        )
    g_arc, g_sib = _backward(charts, s_arc, s_sib, root_policy)
    gc_arc, gc_sib = _backward(charts_c, m_arc, m_sib, root_policy)
    results = []
    total = 0.0
    for b, a in enumerate(arcs):
        n = a.n
        value = float(log_z[b] - log_zc[b])
        arc_grad = (g_arc[b] - gc_arc[b])[: n + 1, : n + 1]
        sib_grad = None
        if sibs is not None:
            sib_grad = (g_sib[b] - gc_sib[b])[: n + 1, : n + 1, : n + 1]
        results.append(LossResult(value, arc_grad, sib_grad))
        total += value
    return total, results


def partial_crf_loss(
    arcs: ArcScores,
    sibs: SibScores | None,
    partial: PartialTree,
    root_policy: RootPolicy = RootPolicy.SINGLE,
) -> LossResult:
    """Marginalized loss over all projective completions of a partial tree."""
    _, results = partial_crf_loss_batch(
        [arcs], None if sibs is None else [sibs], [partial], root_policy
    )
    return results[0]


def local_ce_loss(arcs: ArcScores, target: DepTree | PartialTree) -> LossResult:
    """Head-selection cross entropy, one softmax per annotated word.

    Candidate heads for word j are {0..n} minus j itself; losses of
    unannotated words are omitted.
    """
    n = arcs.n
    if target.n != n:
        raise ValueError(f"target has {target.n} words but scores cover {n}")
    heads = target.heads
    value = 0.0
    grad = np.zeros((n + 1, n + 1))
    for j in range(1, n + 1):
        h = heads[j - 1]
        if h == UNKNOWN:
            continue
        logits = arcs.values[:, j].copy()
        logits[j] = NEG_INF
        m = logits.max()
        e = np.exp(logits - m)
        z = e.sum()
        value += float(m + np.log(z) - logits[h])
        grad[:, j] = e / z
        grad[h, j] -= 1.0
    return LossResult(value, grad, None)


def local_ce_loss_batch(
    arcs: Sequence[ArcScores], targets: Sequence[DepTree | PartialTree]
) -> tuple[float, list[LossResult]]:
    results = [local_ce_loss(a, t) for a, t in zip(arcs, targets)]
    return sum(r.value for r in results), results


def label_ce_loss(
    label_scores: np.ndarray, heads: Sequence[int], labels: Sequence[int | None]
) -> tuple[float, np.ndarray]:
    """Per-arc label cross entropy at the annotated gold arcs.

    ``label_scores`` is the raw (n+1, n+1, L) logits tensor; returns the
    summed loss and its gradient tensor.
    """
    n = len(heads)
    value = 0.0
    grad = np.zeros_like(label_scores)
    for j in range(1, n + 1):
        h = heads[j - 1]
        l = labels[j - 1]
        if h == UNKNOWN or h is None or l is None:
            continue
        logits = label_scores[h, j]
        m = logits.max()
        e = np.exp(logits - m)
        z = e.sum()
        value += float(m + np.log(z) - logits[l])
        grad[h, j] = e / z
        grad[h, j, l] -= 1.0
    return value, grad
