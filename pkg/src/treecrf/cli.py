"""Command-line front end: train, parse, eval, marginals, oracle-check,
and compute (inference over externally supplied score files).

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import copy
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .core import (
    ArcScores,
    DepTree,
    PartialTree,
    RootPolicy,
    SibScores,
    UNKNOWN,
    enumerate_projective_trees,
    is_legal_tree,
    is_projective,
    tree_score,
)
from .decode import DecodeResult, eisner1, eisner2, greedy_fast_path, mbr_decode
from .inference import (
    Marginals,
    constrained_inside,
    inside_first_order,
    inside_second_order,
    marginals_batch,
)
from .loss import (
    crf_loss_batch,
    label_ce_loss,
    local_ce_loss,
    partial_crf_loss_batch,
)
from .scorer import (
    ScorerConfig,
    ScoringModel,
    load_checkpoint,
    save_checkpoint,
    sgd_step,
)
from .scorefile import (
    ScoreRecord,
    WIRE_VERSION,
    read_heads_records,
    read_score_records,
    write_heads_records,
    write_score_records,
    write_value_records,
)
from .treebank import ConllSentence, evaluate, read_conll, sib_prf, write_conll

MODES = ("loc", "crf", "crf2o")
DECODE_MODES = ("viterbi", "mbr", "greedy")
ROOT_TOKEN = "<root>"
UNK_TOKEN = "<unk>"


@dataclass
class RunConfig:
    mode: str = "crf"
    root_policy: RootPolicy = RootPolicy.SINGLE
    decode_mode: str = "viterbi"
    embed_dim: int = 50
    arc_dim: int = 100
    sib_dim: int = 100
    learning_rate: float = 0.005
    momentum: float = 0.9
    label_loss_weight: float = 1.0
    max_epochs: int = 1000
    patience: int = 100
    batch_size: int = 16
    seed: int = 1
    dialect: str = "conllu"
    train_path: str | None = None
    dev_path: str | None = None
    model_path: str | None = None
    input_path: str | None = None
    output_path: str | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.decode_mode not in DECODE_MODES:
            raise UsageError(f"unknown decode mode {self.decode_mode!r}")
        if self.decode_mode == "mbr" and self.mode == "loc":
            raise UsageError("mbr decoding requires a crf or crf2o model")
        for name in ("embed_dim", "arc_dim", "sib_dim", "batch_size", "max_epochs"):
            if getattr(self, name) <= 0:
                raise UsageError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise UsageError("learning rate must be positive")
        if self.patience < 0:
            raise UsageError("patience must be >= 0")


class UsageError(Exception):
    pass


@dataclass
class Vocabulary:
    tokens: list[str]
    labels: list[str]
    index: dict[str, int] = field(init=False)
    label_index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.index = {t: i for i, t in enumerate(self.tokens)}
        self.label_index = {l: i for i, l in enumerate(self.labels)}

    def encode(self, sentence: ConllSentence) -> np.ndarray:
        unk = self.index[UNK_TOKEN]
        ids = [self.index[ROOT_TOKEN]]
        ids.extend(self.index.get(t.form, unk) for t in sentence.tokens)
        return np.array(ids, dtype=np.int64)


def build_vocabulary(sentences) -> Vocabulary:
    forms = sorted({t.form for s in sentences for t in s.tokens})
    labels = sorted(
        {t.deprel for s in sentences for t in s.tokens if t.deprel is not None}
    )
    if not labels:
        labels = ["dep"]
    return Vocabulary([ROOT_TOKEN, UNK_TOKEN] + forms, labels)


def _prepare_training_data(sentences, config: RunConfig, log):
    """Split usable sentences into fully-annotated and partial pools.

    For CRF losses, complete trees must be legal and projective under the
    root policy, and partial annotations must admit at least one projective
    completion; offenders are skipped with a warning (the pseudo-projective
    transform is out of scope).  The local loss accepts everything.
    """
    full, partial, skipped = [], [], 0
    structural = config.mode in ("crf", "crf2o")
    for i, sent in enumerate(sentences):
        if sent.is_fully_annotated():
            tree = DepTree(sent.heads)
            if structural and not (
                is_legal_tree(tree.heads, config.root_policy) and is_projective(tree)
            ):
                log(f"warning: skipping sentence {i}: not a projective "
                    f"{config.root_policy.value}-root tree")
                skipped += 1
                continue
            full.append((i, sent))
        else:
            try:
                p = sent.to_partial()
            except ValueError as exc:
                log(f"warning: skipping sentence {i}: {exc}")
                skipped += 1
                continue
            if structural:
                feasible = constrained_inside(
                    ArcScores.zeros(sent.n), None, p, config.root_policy
                )
                if feasible == float("-inf"):
                    log(f"warning: skipping sentence {i}: annotation has no "
                        f"projective completion")
                    skipped += 1
                    continue
            partial.append((i, sent))
    if not full and not partial:
        raise ValueError("no usable training sentences")
    return full, partial, skipped


def _train_epoch(model, vocab, usable, order, config: RunConfig, velocity):
    full_ids = {i for i, _ in usable[0]}
    by_index = dict(usable[0]) | dict(usable[1])
    total = 0.0
    for start in range(0, len(order), config.batch_size):
        chunk = order[start : start + config.batch_size]
        grads = model.new_grads()
        outputs = {i: model.forward(vocab.encode(by_index[i])) for i in chunk}
        structural = config.mode in ("crf", "crf2o")
        if structural:
            full_chunk = [i for i in chunk if i in full_ids]
            part_chunk = [i for i in chunk if i not in full_ids]
            groups = []
            if full_chunk:
                arcs = [outputs[i].arc for i in full_chunk]
                sibs = [outputs[i].sib for i in full_chunk] if config.mode == "crf2o" else None
                gold = [DepTree(by_index[i].heads) for i in full_chunk]
                value, results = crf_loss_batch(arcs, sibs, gold, config.root_policy)
                groups.append((full_chunk, value, results))
            if part_chunk:
                arcs = [outputs[i].arc for i in part_chunk]
                sibs = [outputs[i].sib for i in part_chunk] if config.mode == "crf2o" else None
                partials = [by_index[i].to_partial() for i in part_chunk]
                value, results = partial_crf_loss_batch(
                    arcs, sibs, partials, config.root_policy
                )
                groups.append((part_chunk, value, results))
            for ids, value, results in groups:
                total += value
                for i, res in zip(ids, results):
                    d_label = _label_grad_for(model, vocab, by_index[i], outputs[i])
                    if d_label is not None:
                        total += d_label[0] * config.label_loss_weight
                    model.backward(
                        outputs[i].cache,
                        res.arc_grad,
                        res.sib_grad,
                        None if d_label is None else d_label[1] * config.label_loss_weight,
                        grads,
                    )
        else:
            for i in chunk:
                sent = by_index[i]
                target = sent.to_partial()
                res = local_ce_loss(outputs[i].arc, target)
                total += res.value
                d_label = _label_grad_for(model, vocab, sent, outputs[i])
                if d_label is not None:
                    total += d_label[0] * config.label_loss_weight
                model.backward(
                    outputs[i].cache,
                    res.arc_grad,
                    None,
                    None if d_label is None else d_label[1] * config.label_loss_weight,
                    grads,
                )
        velocity = sgd_step(
            model.params, grads, config.learning_rate, config.momentum, velocity
        )
    return total, velocity


def _label_grad_for(model, vocab, sent, output):
    heads = sent.heads
    labels = [
        None if t.deprel is None else vocab.label_index.get(t.deprel)
        for t in sent.tokens
    ]
    if all(l is None for l in labels):
        return None
    value, grad = label_ce_loss(output.label, heads, labels)
    return value, grad


def predict(
    model: ScoringModel,
    mode: str,
    vocab: Vocabulary,
    sentences,
    decode_mode: str,
    root_policy: RootPolicy,
) -> tuple[list[ConllSentence], int, int]:
    """Parse sentences; returns (predictions, fast_path_hits, n_sentences)."""
    outputs = [model.forward(vocab.encode(s)) for s in sentences]
    margs: list[Marginals | None] = [None] * len(sentences)
    if mode in ("crf", "crf2o") and decode_mode in ("mbr", "greedy"):
        arcs = [o.arc for o in outputs]
        sibs = [o.sib for o in outputs] if mode == "crf2o" else None
        margs = list(marginals_batch(arcs, sibs, root_policy))
    hits = 0
    predictions = []
    for sent, out, marg in zip(sentences, outputs, margs):
        result = _decode_one(mode, out, marg, decode_mode, root_policy)
        hits += result.used_fast_path
        tree = result.tree
        if not (is_legal_tree(tree.heads, root_policy) and is_projective(tree)):
            raise AssertionError(
                f"decoder produced an illegal tree: {tree.heads}"
            )
        deprels = []
        for j, h in enumerate(tree.heads, start=1):
            deprels.append(vocab.labels[int(np.argmax(out.label[h, j]))])
        predictions.append(sent.with_prediction(tree.heads, deprels))
    return predictions, hits, len(sentences)


def _decode_one(mode, out, marg, decode_mode, root_policy) -> DecodeResult:
    if decode_mode == "greedy":
        values = marg.arc if marg is not None else out.arc.values
        tree = greedy_fast_path(values, root_policy)
        if tree is not None:
            score = float(sum(values[h, j] for h, j in tree.arcs()))
            return DecodeResult(tree, score, used_fast_path=True)
        # fall back to full decoding over the same values
        if marg is not None:
            return mbr_decode(marg, root_policy)
        return eisner1(out.arc, root_policy)
    if decode_mode == "mbr":
        return mbr_decode(marg, root_policy)
    if mode == "crf2o":
        return eisner2(out.arc, out.sib, root_policy)
    return eisner1(out.arc, root_policy)


def run_train(config: RunConfig, log=None) -> dict:
    config.validate()
    lines: list[str] = []

    def emit(msg: str) -> None:
        lines.append(msg)
        if log is not None:
            log(msg)

    if config.train_path is None or config.model_path is None:
        raise UsageError("train requires --train and --model")
    train = read_conll(config.train_path, config.dialect)
    dev = read_conll(config.dev_path, config.dialect) if config.dev_path else train
    vocab = build_vocabulary(train)
    usable = _prepare_training_data(train, config, emit)
    full, partial, skipped = usable
    emit(
        f"training: {len(full)} full + {len(partial)} partial sentences"
        f" ({skipped} skipped), mode {config.mode}"
    )
    scorer_config = ScorerConfig(
        vocab_size=len(vocab.tokens),
        n_labels=len(vocab.labels),
        embed_dim=config.embed_dim,
        arc_dim=config.arc_dim,
        sib_dim=config.sib_dim,
        second_order=config.mode == "crf2o",
        seed=config.seed,
    )
    model = ScoringModel(scorer_config)
    rng = np.random.default_rng(config.seed)
    indices = [i for i, _ in full] + [i for i, _ in partial]
    best_las = -1.0
    best_epoch = 0
    best_params = copy.deepcopy(model.params)
    epochs_run = 0
    velocity = None
    for epoch in range(1, config.max_epochs + 1):
        epochs_run = epoch
        order = list(rng.permutation(indices))
        loss, velocity = _train_epoch(
            model, vocab, (full, partial), order, config, velocity
        )
        preds, _, _ = predict(
            model, config.mode, vocab, dev, config.decode_mode, config.root_policy
        )
        metrics = evaluate(preds, dev)
        if metrics.las > best_las + 1e-12:
            best_las = metrics.las
            best_epoch = epoch
            best_params = copy.deepcopy(model.params)
        emit(
            f"epoch {epoch} loss {loss:.6f} dev_uas {metrics.uas:.2f} "
            f"dev_las {metrics.las:.2f} best {best_epoch}"
        )
        if metrics.las >= 100.0 - 1e-9 and metrics.uas >= 100.0 - 1e-9:
            break
        if epoch - best_epoch > config.patience:
            emit(f"early stop: no dev improvement in {config.patience + 1} epochs")
            break
    meta = {
        "mode": config.mode,
        "root_policy": config.root_policy.value,
        "best_epoch": str(best_epoch),
        "best_las": f"{best_las:.4f}",
    }
    save_checkpoint(
        config.model_path, scorer_config, best_params, meta, vocab.tokens, vocab.labels
    )
    with open(config.model_path + ".log", "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return {
        "best_las": best_las,
        "best_epoch": best_epoch,
        "epochs_run": epochs_run,
        "model_path": config.model_path,
    }


def _load_model(path) -> tuple[ScoringModel, dict, Vocabulary]:
    scorer_config, params, meta, tokens, labels = load_checkpoint(path)
    model = ScoringModel(scorer_config, params)
    return model, meta, Vocabulary(tokens, labels)


def run_parse(config: RunConfig, log=print) -> dict:
    config.validate()
    if config.model_path is None or config.input_path is None or config.output_path is None:
        raise UsageError("parse requires --model, --input and --output")
    model, meta, vocab = _load_model(config.model_path)
    mode = meta.get("mode", "crf")
    if config.decode_mode == "mbr" and mode == "loc":
        raise UsageError("mbr decoding requires a crf or crf2o checkpoint")
    root_policy = RootPolicy(meta.get("root_policy", "single"))
    sentences = read_conll(config.input_path, config.dialect)
    preds, hits, total = predict(
        model, mode, vocab, sentences, config.decode_mode, root_policy
    )
    write_conll(config.output_path, preds)
    log(f"parsed {total} sentences with {mode}/{config.decode_mode}")
    if config.decode_mode == "greedy":
        rate = 100.0 * hits / total if total else 0.0
        log(f"fast-path hit rate: {rate:.2f}% ({hits}/{total})")
    return {"sentences": total, "fast_path_hits": hits}


def run_eval(config: RunConfig, pred_path, gold_path, log=print) -> dict:
    pred = read_conll(pred_path, config.dialect)
    gold = read_conll(gold_path, config.dialect)
    metrics = evaluate(pred, gold)
    log(metrics.table())
    for line in metrics.kv_lines():
        log(line)
    out = {"metrics": metrics}
    if all(s.is_fully_annotated() for s in gold):
        sib = sib_prf(pred, gold)
        for line in sib.kv_lines():
            log(line)
        out["sib"] = sib
    else:
        log("sib metrics skipped: gold is partially annotated")
    return out


def run_marginals(config: RunConfig, with_sib: bool, log=print) -> None:
    if config.model_path is None or config.input_path is None or config.output_path is None:
        raise UsageError("marginals requires --model, --input and --output")
    model, meta, vocab = _load_model(config.model_path)
    mode = meta.get("mode", "crf")
    if mode == "loc":
        raise UsageError("the local model defines no marginals; train crf or crf2o")
    if with_sib and mode != "crf2o":
        raise UsageError("sibling marginals require a crf2o checkpoint")
    root_policy = RootPolicy(meta.get("root_policy", "single"))
    sentences = read_conll(config.input_path, config.dialect)
    outputs = [model.forward(vocab.encode(s)) for s in sentences]
    arcs = [o.arc for o in outputs]
    sibs = [o.sib for o in outputs] if mode == "crf2o" else None
    margs = marginals_batch(arcs, sibs, root_policy)
    records = [
        ScoreRecord(i, m.arc, m.sib if with_sib else None)
        for i, m in enumerate(margs)
    ]
    with open(config.output_path, "w", encoding="utf-8") as f:
        write_score_records(f, records)
    log(f"wrote marginals for {len(records)} sentences")


def _scores_from_record(rec: ScoreRecord) -> tuple[ArcScores, SibScores | None]:
    arcs = ArcScores(rec.arc)
    sibs = SibScores(rec.sib) if rec.sib is not None else None
    return arcs, sibs


def run_compute(op, scores_path, out_path, root_policy, constraints_path=None) -> None:
    with open(scores_path, "r", encoding="utf-8") as f:
        records = read_score_records(f)
    results_values: list[float] = []
    results_heads: list[list[int]] = []
    head_scores: list[float] = []
    out_records: list[ScoreRecord] = []
    constraints = None
    if op == "constrained":
        if constraints_path is None:
            raise UsageError("constrained inside requires --constraints")
        with open(constraints_path, "r", encoding="utf-8") as f:
            constraints = read_heads_records(f)
        if len(constraints) != len(records):
            raise ValueError(
                f"{len(records)} score records but {len(constraints)} "
                f"constraint records"
            )
    for idx, rec in enumerate(records):
        arcs, sibs = _scores_from_record(rec)
        if op == "inside":
            if sibs is None:
                value = inside_first_order([arcs], root_policy).log_partition[0]
            else:
                value = inside_second_order([(arcs, sibs)], root_policy).log_partition[0]
            results_values.append(float(value))
        elif op == "constrained":
            partial = PartialTree(tuple(constraints[idx]))
            results_values.append(
                constrained_inside(arcs, sibs, partial, root_policy)
            )
        elif op == "marginals":
            m = marginals_batch(
                [arcs], None if sibs is None else [sibs], root_policy
            )[0]
            out_records.append(ScoreRecord(rec.sent_id, m.arc, m.sib))
        elif op == "viterbi":
            res = (
                eisner1(arcs, root_policy)
                if sibs is None
                else eisner2(arcs, sibs, root_policy)
            )
            results_heads.append(list(res.tree.heads))
            head_scores.append(res.score)
        elif op == "mbr":
            m = marginals_batch(
                [arcs], None if sibs is None else [sibs], root_policy
            )[0]
            res = mbr_decode(m, root_policy)
            results_heads.append(list(res.tree.heads))
            head_scores.append(res.score)
        else:
            raise UsageError(f"unknown compute op {op!r}")
    with open(out_path, "w", encoding="utf-8") as f:
        if op in ("inside", "constrained"):
            write_value_records(f, results_values)
        elif op == "marginals":
            write_score_records(f, out_records)
        else:
            write_heads_records(f, results_heads, head_scores)


def _lse_list(values) -> float:
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def run_oracle_check(seeds, max_n, inject_error, log=print) -> int:
    """Enumeration-oracle agreement sweep; returns the number of failures."""
    failures = 0

    def check(name, got, want, tol):
        nonlocal failures
        err = abs(got - want)
        if err <= tol:
            log(f"ok   {name} (|err|={err:.2e})")
        else:
            failures += 1
            log(f"FAIL {name}: got {got!r}, want {want!r}")

    trees3 = enumerate_projective_trees(3, RootPolicy.SINGLE)
    log(f"enumeration: n=3 single-root has {len(trees3)} trees")
    z3 = inside_first_order([ArcScores.zeros(3)]).log_partition[0]
    if inject_error:
        z3 += 1e-3
    check("counting n=3 single-root", float(z3), math.log(len(trees3)), 1e-12)

    for policy in (RootPolicy.SINGLE, RootPolicy.MULTI):
        for n in range(1, max_n + 1):
            trees = enumerate_projective_trees(n, policy)
            for seed in seeds:
                rng = np.random.default_rng(seed + 1000 * n)
                arcs = ArcScores(rng.uniform(-2, 2, (n + 1, n + 1)))
                sibs = SibScores(rng.uniform(-2, 2, (n + 1, n + 1, n + 1)))
                tag = f"n={n} policy={policy.value} seed={seed}"
                scores1 = [tree_score(arcs, None, t) for t in trees]
                scores2 = [tree_score(arcs, sibs, t) for t in trees]
                z1 = inside_first_order([arcs], policy).log_partition[0]
                check(f"inside1 {tag}", float(z1), _lse_list(scores1), 1e-8)
                z2 = inside_second_order([(arcs, sibs)], policy).log_partition[0]
                check(f"inside2 {tag}", float(z2), _lse_list(scores2), 1e-8)
                m = marginals_batch([arcs], [sibs], policy)[0]
                post = np.exp(np.array(scores2) - _lse_list(scores2))
                want_arc = np.zeros((n + 1, n + 1))
                for p, t in zip(post, trees):
                    for h, j in t.arcs():
                        want_arc[h, j] += p
                check(
                    f"marginals {tag}",
                    float(np.abs(m.arc - want_arc).max()),
                    0.0,
                    1e-8,
                )
                best1 = eisner1(arcs, policy).score
                check(f"eisner1 {tag}", best1, max(scores1), 1e-10)
                best2 = eisner2(arcs, sibs, policy).score
                check(f"eisner2 {tag}", best2, max(scores2), 1e-10)
                mb = mbr_decode(m, policy)
                want_mbr = max(
                    sum(m.arc[h, j] for h, j in t.arcs()) for t in trees
                )
                check(f"mbr {tag}", mb.score, want_mbr, 1e-9)
                if n >= 2:
                    heads = [UNKNOWN] * n
                    pick = trees[int(rng.integers(0, len(trees)))]
                    j = int(rng.integers(0, n))
                    heads[j] = pick.heads[j]
                    partial = PartialTree(tuple(heads))
                    got = constrained_inside(arcs, sibs, partial, policy)
                    compatible = [
                        s
                        for s, t in zip(scores2, trees)
                        if t.heads[j] == heads[j]
                    ]
                    check(f"constrained {tag}", got, _lse_list(compatible), 1e-8)
    status = "all checks passed" if failures == 0 else f"{failures} FAILURES"
    log(f"oracle-check: {status}")
    return failures


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=MODES, default="crf")
    p.add_argument("--root-policy", choices=("single", "multi"), default="single")
    p.add_argument("--decode", choices=DECODE_MODES, default="viterbi")
    p.add_argument("--embed-dim", type=int, default=50)
    p.add_argument("--arc-dim", type=int, default=100)
    p.add_argument("--sib-dim", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--label-loss-weight", type=float, default=1.0)
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--patience", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--dialect", choices=("conllu", "conllx"), default="conllu")


def _config_from_args(args) -> RunConfig:
    seed = args.seed
    env_seed = os.environ.get("TREECRF_SEED")
    if env_seed is not None:
        seed = int(env_seed)
    return RunConfig(
        mode=args.mode,
        root_policy=RootPolicy(args.root_policy),
        decode_mode=args.decode,
        embed_dim=args.embed_dim,
        arc_dim=args.arc_dim,
        sib_dim=args.sib_dim,
        learning_rate=args.lr,
        momentum=args.momentum,
        label_loss_weight=args.label_loss_weight,
        max_epochs=args.max_epochs,
        patience=args.patience,
        batch_size=args.batch_size,
        seed=seed,
        dialect=args.dialect,
        train_path=getattr(args, "train", None),
        dev_path=getattr(args, "dev", None),
        model_path=getattr(args, "model", None),
        input_path=getattr(args, "input", None),
        output_path=getattr(args, "output", None),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecrf",
        description="Projective dependency parsing with first- and "
        "second-order TreeCRF inference.",
    )
    parser.add_argument(
        "--version", action="version", version=f"treecrf {__version__} {WIRE_VERSION}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a toy model on a treebank")
    _add_config_flags(p)
    p.add_argument("--train", required=True, help="training treebank")
    p.add_argument("--dev", help="development treebank (defaults to training data)")
    p.add_argument("--model", required=True, help="checkpoint output path")

    p = sub.add_parser("parse", help="parse a treebank with a trained model")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("eval", help="score predictions against gold trees")
    _add_config_flags(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)

    p = sub.add_parser("marginals", help="dump arc marginal matrices")
    _add_config_flags(p)
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--with-sib", action="store_true", help="include sibling marginals")

    p = sub.add_parser(
        "oracle-check", help="run the enumeration-oracle agreement suite"
    )
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument(
        "--inject-error",
        action="store_true",
        help="perturb one computation to demonstrate failure reporting",
    )

    p = sub.add_parser(
        "compute", help="run inference over an externally supplied score file"
    )
    p.add_argument(
        "--op",
        required=True,
        choices=("inside", "marginals", "viterbi", "mbr", "constrained"),
    )
    p.add_argument("--scores", required=True, help="score file (see README)")
    p.add_argument("--out", required=True)
    p.add_argument("--root-policy", choices=("single", "multi"), default="single")
    p.add_argument("--constraints", help="heads file for constrained inside")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            run_train(_config_from_args(args), log=print)
        elif args.command == "parse":
            run_parse(_config_from_args(args))
        elif args.command == "eval":
            run_eval(_config_from_args(args), args.pred, args.gold)
        elif args.command == "marginals":
            run_marginals(_config_from_args(args), args.with_sib)
        elif args.command == "oracle-check":
            failures = run_oracle_check(args.seeds, args.max_n, args.inject_error)
            return 1 if failures else 0
        elif args.command == "compute":
            run_compute(
                args.op,
                args.scores,
                args.out,
                RootPolicy(args.root_policy),
                args.constraints,
            )
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
