"""Trainable score heads: biaffine arcs, triaffine siblings, label logits.

The heavy-duty neural encoder is out of scope; token representations come
from an embedding table plus one role-specific linear projection and tanh
per role.  Anything producing :class:`TokenReps` can be swapped in instead.
Gradients are hand-written (the score heads are plain multilinear maps) and
checked against finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ArcScores, SibScores, valid_arc_mask, valid_sib_mask

CHECKPOINT_MAGIC = "treecrf-checkpoint v1"


@dataclass(frozen=True)
class BiaffineParams:
    """Arc head: s(i,j) = [r_mod_j; 1]^T W r_head_i, W of shape (d+1, d)."""

    weight: np.ndarray


@dataclass(frozen=True)
class TriaffineParams:
    """Sibling head: s(i,k,j) = [r_sib_k; 1]^T (r_head_i^T W) [r_mod_j; 1],
    W of shape (d'+1, d', d'+1); augmentation sits on the sibling and
    modifier slots."""

    weight: np.ndarray


@dataclass
class TokenReps:
    """Role-specific representation vectors, row 0 is the pseudo-root."""

    head: np.ndarray
    mod: np.ndarray
    sib_head: np.ndarray | None = None
    sib: np.ndarray | None = None
    sib_mod: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.head.shape[0] - 1


def _augment(r: np.ndarray) -> np.ndarray:
    return np.concatenate([r, np.ones((r.shape[0], 1))], axis=1)


def biaffine_score(reps: TokenReps, params: BiaffineParams) -> ArcScores:
    """Arc scores for all (head, modifier) pairs; bilinear in the reps."""
    d = reps.head.shape[1]
    if params.weight.shape != (d + 1, d):
        raise ValueError(
            f"biaffine weight must be ({d + 1}, {d}), got {params.weight.shape}"
        )
    return ArcScores(biaffine_raw(reps.head, reps.mod, params.weight))


def biaffine_raw(head: np.ndarray, mod: np.ndarray, weight: np.ndarray) -> np.ndarray:
    return head @ (_augment(mod) @ weight).T


def biaffine_backward(
    head: np.ndarray,
    mod: np.ndarray,
    weight: np.ndarray,
    d_arc: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chain rule through the bilinear form; returns (d_head, d_mod, d_weight)."""
    n = head.shape[0] - 1
    g = np.where(valid_arc_mask(n), d_arc, 0.0)
    aug = _augment(mod)
    d_head = g @ (aug @ weight)
    d_aug = g.T @ (head @ weight.T)
    d_weight = np.einsum("ij,ja,ic->ac", g, aug, head)
    return d_head, d_aug[:, :-1], d_weight


def triaffine_score(reps: TokenReps, params: TriaffineParams) -> SibScores:
    """Adjacent-sibling scores as a three-way multilinear contraction."""
    if reps.sib_head is None or reps.sib is None or reps.sib_mod is None:
        raise ValueError("token reps carry no sibling-role vectors")
    d = reps.sib_head.shape[1]
    if params.weight.shape != (d + 1, d, d + 1):
        raise ValueError(
            f"triaffine weight must be ({d + 1}, {d}, {d + 1}), "
            f"got {params.weight.shape}"
        )
    return SibScores(
        triaffine_raw(reps.sib_head, reps.sib, reps.sib_mod, params.weight)
    )


def triaffine_raw(
    head: np.ndarray, sib: np.ndarray, mod: np.ndarray, weight: np.ndarray
) -> np.ndarray:
    return np.einsum(
        "ka,ic,acb,jb->ikj", _augment(sib), head, weight, _augment(mod), optimize=True
    )


def triaffine_backward(
    head: np.ndarray,
    sib: np.ndarray,
    mod: np.ndarray,
    weight: np.ndarray,
    d_sib_scores: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Returns (d_head, d_sib, d_mod, d_weight)."""
    n = head.shape[0] - 1
    g = np.where(valid_sib_mask(n), d_sib_scores, 0.0)
    aug_s = _augment(sib)
    aug_m = _augment(mod)
    d_head = np.einsum("ikj,ka,acb,jb->ic", g, aug_s, weight, aug_m, optimize=True)
    d_aug_s = np.einsum("ikj,ic,acb,jb->ka", g, head, weight, aug_m, optimize=True)
    d_aug_m = np.einsum("ikj,ka,ic,acb->jb", g, aug_s, head, weight, optimize=True)
    d_weight = np.einsum("ikj,ka,ic,jb->acb", g, aug_s, head, aug_m, optimize=True)
    return d_head, d_aug_s[:, :-1], d_aug_m[:, :-1], d_weight


def label_raw(head: np.ndarray, mod: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """(n+1, n+1, L) label logits from a per-label bilinear form."""
    return np.einsum(
        "ia,lab,jb->ijl", _augment(head), weight, _augment(mod), optimize=True
    )


def label_backward(
    head: np.ndarray, mod: np.ndarray, weight: np.ndarray, d_label: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    aug_h = _augment(head)
    aug_m = _augment(mod)
    d_aug_h = np.einsum("ijl,lab,jb->ia", d_label, weight, aug_m, optimize=True)
    d_aug_m = np.einsum("ijl,ia,lab->jb", d_label, aug_h, weight, optimize=True)
    d_weight = np.einsum("ijl,ia,jb->lab", d_label, aug_h, aug_m, optimize=True)
    return d_aug_h[:, :-1], d_aug_m[:, :-1], d_weight


@dataclass
class ScorerConfig:
    vocab_size: int
    n_labels: int
    embed_dim: int = 50
    arc_dim: int = 100
    sib_dim: int = 100  # the dimension reported for the sibling-role vectors
    second_order: bool = True
    seed: int = 0


ARC_ROLES = ("head", "mod")
SIB_ROLES = ("sib_head", "sib", "sib_mod")


def init_params(config: ScorerConfig) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(config.seed)
    e, d, ds = config.embed_dim, config.arc_dim, config.sib_dim

    def linear(rows, cols):
        return rng.normal(0.0, 1.0 / np.sqrt(cols), size=(rows, cols))

    params: dict[str, np.ndarray] = {
        "embed": rng.normal(0.0, 1.0, size=(config.vocab_size, e))
    }
    for role in ARC_ROLES:
        params[f"{role}_w"] = linear(d, e)
        params[f"{role}_b"] = np.zeros(d)
    if config.second_order:
        for role in SIB_ROLES:
            params[f"{role}_w"] = linear(ds, e)
            params[f"{role}_b"] = np.zeros(ds)
        params["tri_w"] = rng.normal(
            0.0, 1.0 / np.sqrt(ds), size=(ds + 1, ds, ds + 1)
        )
    params["arc_w"] = rng.normal(0.0, 1.0 / np.sqrt(d), size=(d + 1, d))
    params["label_w"] = rng.normal(
        0.0, 1.0 / np.sqrt(d), size=(config.n_labels, d + 1, d + 1)
    )
    return params


@dataclass
class ForwardCache:
    ids: np.ndarray
    embedded: np.ndarray
    reps: dict[str, np.ndarray]


@dataclass
class SentenceScores:
    arc: ArcScores
    sib: SibScores | None
    label: np.ndarray  # raw (n+1, n+1, L) logits
    cache: ForwardCache


class ScoringModel:
    """Toy encoder plus the multilinear score heads, with retained forward
    state so losses' score gradients can be pushed back to the parameters."""

    def __init__(self, config: ScorerConfig, params: dict[str, np.ndarray] | None = None):
        self.config = config
        self.params = params if params is not None else init_params(config)

    def roles(self) -> tuple[str, ...]:
        return ARC_ROLES + (SIB_ROLES if self.config.second_order else ())

    def forward(self, ids: Sequence[int]) -> SentenceScores:
        ids = np.asarray(ids, dtype=np.int64)
        h = self.params["embed"][ids]
        reps = {
            role: np.tanh(h @ self.params[f"{role}_w"].T + self.params[f"{role}_b"])
            for role in self.roles()
        }
        arc = ArcScores(biaffine_raw(reps["head"], reps["mod"], self.params["arc_w"]))
        sib = None
        if self.config.second_order:
            sib = SibScores(
                triaffine_raw(
                    reps["sib_head"], reps["sib"], reps["sib_mod"], self.params["tri_w"]
                )
            )
        label = label_raw(reps["head"], reps["mod"], self.params["label_w"])
        return SentenceScores(arc, sib, label, ForwardCache(ids, h, reps))

    def new_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def backward(
        self,
        cache: ForwardCache,
        d_arc: np.ndarray | None,
        d_sib: np.ndarray | None,
        d_label: np.ndarray | None,
        grads: dict[str, np.ndarray],
    ) -> None:
        """Accumulate parameter gradients for one sentence into ``grads``."""
        reps = cache.reps
        d_reps = {role: np.zeros_like(reps[role]) for role in self.roles()}
        if d_arc is not None:
            dh, dm, dw = biaffine_backward(
                reps["head"], reps["mod"], self.params["arc_w"], d_arc
            )
            d_reps["head"] += dh
            d_reps["mod"] += dm
            grads["arc_w"] += dw
        if d_sib is not None:
            dh, ds, dm, dw = triaffine_backward(
                reps["sib_head"],
                reps["sib"],
                reps["sib_mod"],
                self.params["tri_w"],
                d_sib,
            )
            d_reps["sib_head"] += dh
            d_reps["sib"] += ds
            d_reps["sib_mod"] += dm
            grads["tri_w"] += dw
        if d_label is not None:
            dh, dm, dw = label_backward(
                reps["head"], reps["mod"], self.params["label_w"], d_label
            )
            d_reps["head"] += dh
            d_reps["mod"] += dm
            grads["label_w"] += dw
        d_embedded = np.zeros_like(cache.embedded)
        for role in self.roles():
            d_pre = d_reps[role] * (1.0 - reps[role] ** 2)
            grads[f"{role}_w"] += d_pre.T @ cache.embedded
            grads[f"{role}_b"] += d_pre.sum(axis=0)
            d_embedded += d_pre @ self.params[f"{role}_w"]
        np.add.at(grads["embed"], cache.ids, d_embedded)


def sgd_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    lr: float,
    momentum: float = 0.0,
    velocity: dict[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    """Plain gradient descent with optional momentum; updates in place and
    returns the velocity buffers for the next step."""
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    if momentum == 0.0:
        for k, g in grads.items():
            params[k] -= lr * g
        return {}
    if velocity is None:
        velocity = {k: np.zeros_like(v) for k, v in params.items()}
    for k, g in grads.items():
        velocity[k] = momentum * velocity[k] - lr * g
        params[k] += velocity[k]
    return velocity


def save_checkpoint(
    path,
    config: ScorerConfig,
    params: dict[str, np.ndarray],
    meta: dict[str, str],
    vocab: Sequence[str],
    labels: Sequence[str],
) -> None:
    """Textual key/shape/values checkpoint with a versioned header."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(CHECKPOINT_MAGIC + "\n")
        for key in ("embed_dim", "arc_dim", "sib_dim"):
            f.write(f"meta {key} {getattr(config, key)}\n")
        f.write(f"meta second_order {int(config.second_order)}\n")
        for key, value in meta.items():
            f.write(f"meta {key} {value}\n")
        f.write(f"vocab {len(vocab)}\n")
        for token in vocab:
            f.write(token + "\n")
        f.write(f"labels {len(labels)}\n")
        for label in labels:
            f.write(label + "\n")
        for name in sorted(params):
            arr = params[name]
            shape = " ".join(str(s) for s in arr.shape)
            f.write(f"param {name} {shape}\n")
            flat = arr.reshape(-1)
            for start in range(0, len(flat), 8):
                f.write(" ".join("%.17g" % v for v in flat[start : start + 8]) + "\n")
        f.write("end\n")


def load_checkpoint(path):
    """Returns (config, params, meta, vocab, labels)."""
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"not a treecrf checkpoint: {path}")
    meta: dict[str, str] = {}
    vocab: list[str] = []
    labels: list[str] = []
    params: dict[str, np.ndarray] = {}
    pos = 1
    while pos < len(lines):
        line = lines[pos]
        if line == "end":
            break
        head, _, rest = line.partition(" ")
        if head == "meta":
            key, _, value = rest.partition(" ")
            meta[key] = value
            pos += 1
        elif head == "vocab":
            count = int(rest)
            vocab = lines[pos + 1 : pos + 1 + count]
            pos += 1 + count
        elif head == "labels":
            count = int(rest)
            labels = lines[pos + 1 : pos + 1 + count]
            pos += 1 + count
        elif head == "param":
            parts = rest.split()
            name, shape = parts[0], tuple(int(s) for s in parts[1:])
            size = int(np.prod(shape))
            values: list[float] = []
            pos += 1
            while len(values) < size:
                values.extend(float(v) for v in lines[pos].split())
                pos += 1
            params[name] = np.array(values).reshape(shape)
        else:
            raise ValueError(f"unrecognised checkpoint line: {line!r}")
    config = ScorerConfig(
        vocab_size=len(vocab),
        n_labels=len(labels),
        embed_dim=int(meta.pop("embed_dim")),
        arc_dim=int(meta.pop("arc_dim")),
        sib_dim=int(meta.pop("sib_dim")),
        second_order=bool(int(meta.pop("second_order"))),
    )
    return config, params, meta, vocab, labels
