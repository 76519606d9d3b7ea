"""CoNLL-X / CoNLL-U ingestion, partial-annotation handling, and metrics.

Rows are kept verbatim so that reading and writing round-trips files
byte-identically; parsed head/label views sit alongside the raw columns.
Multiword-token and empty-node rows (CoNLL-U) are carried through I/O but
never occupy parsing indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import DepTree, PartialTree, UNKNOWN, extract_sib_triples

CONLL_COLUMNS = 10

# Universal punctuation part-of-speech; the default scoring filter.
DEFAULT_PUNCT_TAGS = frozenset({"PUNCT"})


@dataclass
class ConllToken:
    """One word row; ``head`` is UNKNOWN for '_' (partial annotation)."""

    index: int
    form: str
    lemma: str
    upos: str
    xpos: str
    feats: str
    head: int
    deprel: str | None
    deps: str
    misc: str

    def to_row(self) -> str:
        head = "_" if self.head == UNKNOWN else str(self.head)
        deprel = self.deprel if self.deprel is not None else "_"
        return "\t".join(
            [
                str(self.index),
                self.form,
                self.lemma,
                self.upos,
                self.xpos,
                self.feats,
                head,
                deprel,
                self.deps,
                self.misc,
            ]
        )


@dataclass
class ConllSentence:
    tokens: list[ConllToken]
    comments: list[str] = field(default_factory=list)
    # (position before this many word tokens, raw line) for 1-2 / 1.1 rows
    extra_rows: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def heads(self) -> tuple[int, ...]:
        return tuple(t.head for t in self.tokens)

    def is_fully_annotated(self) -> bool:
        return all(t.head != UNKNOWN for t in self.tokens)

    def to_partial(self) -> PartialTree:
        return PartialTree(self.heads)

    def to_tree(self) -> DepTree:
        if not self.is_fully_annotated():
            raise ValueError("sentence is partially annotated")
        return DepTree(self.heads)

    def with_prediction(
        self, heads: Sequence[int], deprels: Sequence[str] | None = None
    ) -> "ConllSentence":
        if len(heads) != self.n:
            raise ValueError("prediction length mismatch")
        tokens = []
        for t, h in zip(self.tokens, heads):
            rel = t.deprel
            if deprels is not None:
                rel = deprels[t.index - 1]
            tokens.append(
                ConllToken(
                    t.index, t.form, t.lemma, t.upos, t.xpos, t.feats,
                    int(h), rel, t.deps, t.misc,
                )
            )
        return ConllSentence(tokens, list(self.comments), list(self.extra_rows))


def _parse_token(line: str, lineno: int, dialect: str) -> ConllToken:
    cols = line.split("\t")
    if len(cols) != CONLL_COLUMNS:
        raise ValueError(
            f"line {lineno}: expected {CONLL_COLUMNS} tab-separated columns, "
            f"got {len(cols)}"
        )
    try:
        index = int(cols[0])
    except ValueError as exc:
        raise ValueError(f"line {lineno}: bad token id {cols[0]!r}") from exc
    if cols[6] == "_":
        head = UNKNOWN
    else:
        try:
            head = int(cols[6])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad head {cols[6]!r}") from exc
    deprel = None if cols[7] == "_" else cols[7]
    return ConllToken(
        index, cols[1], cols[2], cols[3], cols[4], cols[5], head, deprel,
        cols[8], cols[9],
    )


def _is_extra_row(line: str, dialect: str) -> bool:
    if dialect != "conllu":
        return False
    first = line.split("\t", 1)[0]
    return "-" in first or "." in first


def read_conll(path, dialect: str = "conllu") -> list[ConllSentence]:
    """Parse a 10-column treebank file into sentences.

    ``dialect`` is "conllu" (multiword tokens and empty nodes allowed) or
    "conllx" (plain integer ids only).
    """
    if dialect not in ("conllu", "conllx"):
        raise ValueError(f"unknown dialect {dialect!r}")
    with open(path, "r", encoding="utf-8") as f:
        return parse_conll(f, dialect)


def parse_conll(lines: Iterable[str], dialect: str = "conllu") -> list[ConllSentence]:
    sentences: list[ConllSentence] = []
    tokens: list[ConllToken] = []
    comments: list[str] = []
    extra: list[tuple[int, str]] = []

    def flush(lineno: int) -> None:
        nonlocal tokens, comments, extra
        if not tokens and not comments and not extra:
            return
        if not tokens:
            raise ValueError(f"line {lineno}: sentence block with no tokens")
        for pos, t in enumerate(tokens, start=1):
            if t.index != pos:
                raise ValueError(
                    f"line {lineno}: token ids not contiguous "
                    f"(expected {pos}, got {t.index})"
                )
            if t.head != UNKNOWN and not 0 <= t.head <= len(tokens):
                raise ValueError(f"line {lineno}: head {t.head} out of range")
        sentences.append(ConllSentence(tokens, comments, extra))
        tokens, comments, extra = [], [], []

    lineno = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush(lineno)
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        if _is_extra_row(line, dialect):
            extra.append((len(tokens), line))
            continue
        tokens.append(_parse_token(line, lineno, dialect))
    flush(lineno + 1)
    return sentences


def write_conll(path, sentences: Sequence[ConllSentence]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_conll(sentences))


def format_conll(sentences: Sequence[ConllSentence]) -> str:
    # Every sentence block, including the last, ends with one blank line.
    blocks = []
    for sent in sentences:
        lines = list(sent.comments)
        extra = dict_by_position(sent.extra_rows)
        for pos, token in enumerate(sent.tokens):
            lines.extend(extra.get(pos, ()))
            lines.append(token.to_row())
        lines.extend(extra.get(len(sent.tokens), ()))
        blocks.append("\n".join(lines) + "\n\n")
    return "".join(blocks)


def dict_by_position(rows: Sequence[tuple[int, str]]) -> dict[int, list[str]]:
    out: dict[int, list[str]] = {}
    for pos, line in rows:
        out.setdefault(pos, []).append(line)
    return out


@dataclass
class Metrics:
    uas: float
    las: float
    ucm: float
    lcm: float
    scored_tokens: int
    sentences: int

    def kv_lines(self) -> list[str]:
        return [
            f"uas={self.uas:.4f}",
            f"las={self.las:.4f}",
            f"ucm={self.ucm:.4f}",
            f"lcm={self.lcm:.4f}",
            f"scored_tokens={self.scored_tokens}",
            f"sentences={self.sentences}",
        ]

    def table(self) -> str:
        return (
            f"{'metric':<8}{'value':>10}\n"
            f"{'UAS':<8}{self.uas:>10.2f}\n"
            f"{'LAS':<8}{self.las:>10.2f}\n"
            f"{'UCM':<8}{self.ucm:>10.2f}\n"
            f"{'LCM':<8}{self.lcm:>10.2f}"
        )


def _scoring_indices(
    gold: ConllSentence, punct_tags: frozenset[str]
) -> list[int]:
    keep = []
    for t in gold.tokens:
        if t.head == UNKNOWN:
            continue  # partial gold: unannotated words are not scored
        if t.upos in punct_tags or t.xpos in punct_tags:
            continue
        keep.append(t.index - 1)
    return keep


def evaluate(
    pred: Sequence[ConllSentence],
    gold: Sequence[ConllSentence],
    punct_tags: frozenset[str] = DEFAULT_PUNCT_TAGS,
) -> Metrics:
    """Attachment and complete-match rates over scoring tokens.

    Tokens without a gold head and tokens whose POS is in ``punct_tags``
    are excluded everywhere.  All rates are percentages.
    """
    if len(pred) != len(gold):
        raise ValueError(
            f"prediction has {len(pred)} sentences, gold has {len(gold)}"
        )
    total = correct_heads = correct_both = 0
    sents = whole_u = whole_l = 0
    for p, g in zip(pred, gold):
        if p.n != g.n:
            raise ValueError(
                f"sentence length mismatch: pred {p.n} vs gold {g.n}"
            )
        idx = _scoring_indices(g, punct_tags)
        if not idx:
            continue
        sents += 1
        ok_u = ok_l = 0
        for i in idx:
            if p.tokens[i].head == g.tokens[i].head:
                ok_u += 1
                if p.tokens[i].deprel == g.tokens[i].deprel:
                    ok_l += 1
        total += len(idx)
        correct_heads += ok_u
        correct_both += ok_l
        whole_u += ok_u == len(idx)
        whole_l += ok_l == len(idx)
    if total == 0:
        raise ValueError("no scoring tokens")
    return Metrics(
        uas=100.0 * correct_heads / total,
        las=100.0 * correct_both / total,
        ucm=100.0 * whole_u / sents,
        lcm=100.0 * whole_l / sents,
        scored_tokens=total,
        sentences=sents,
    )


@dataclass
class SibMetrics:
    precision: float
    recall: float
    f1: float

    def kv_lines(self) -> list[str]:
        return [
            f"sib_p={self.precision:.4f}",
            f"sib_r={self.recall:.4f}",
            f"sib_f={self.f1:.4f}",
        ]


def sib_prf(
    pred: Sequence[ConllSentence], gold: Sequence[ConllSentence]
) -> SibMetrics:
    """Micro-averaged P/R/F over adjacent-sibling triples of pred vs gold.

    Requires fully annotated gold trees; empty prediction sets against a
    non-empty gold set score precision 0, and F is 0 whenever P + R is.
    """
    if len(pred) != len(gold):
        raise ValueError("sentence count mismatch")
    tp = n_pred = n_gold = 0
    for p, g in zip(pred, gold):
        if not g.is_fully_annotated():
            raise ValueError("SIB evaluation needs fully annotated references")
        pt = extract_sib_triples(DepTree(p.heads))
        gt = extract_sib_triples(g.to_tree())
        tp += len(pt & gt)
        n_pred += len(pt)
        n_gold += len(gt)
    precision = 100.0 * tp / n_pred if n_pred else (100.0 if n_gold == 0 else 0.0)
    recall = 100.0 * tp / n_gold if n_gold else (100.0 if n_pred == 0 else 0.0)
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return SibMetrics(precision, recall, f1)
