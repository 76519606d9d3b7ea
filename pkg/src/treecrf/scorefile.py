"""Text wire format for score matrices, marginal dumps, and head sequences.

One record per sentence.  A score record is a header line ``#<id> <n>
<has_sib>`` followed by the (n+1)x(n+1) arc matrix and, when has_sib is 1,
the (n+1)^3 sibling tensor, row-major, whitespace-separated (line breaks are
not significant).  Values are written with 17 significant digits so doubles
round-trip exactly.  A heads record is ``#<id> <n>`` followed by n entries,
``_`` for an unannotated head.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .core import UNKNOWN

WIRE_VERSION = "wire-v1"


@dataclass
class ScoreRecord:
    sent_id: int
    arc: np.ndarray
    sib: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.arc.shape[0] - 1


def _write_matrix(f: TextIO, arr: np.ndarray) -> None:
    for row in arr.reshape(-1, arr.shape[-1]):
        f.write(" ".join("%.17g" % v for v in row) + "\n")


def write_score_records(f: TextIO, records: Iterable[ScoreRecord]) -> None:
    for rec in records:
        f.write(f"#{rec.sent_id} {rec.n} {int(rec.sib is not None)}\n")
        _write_matrix(f, rec.arc)
        if rec.sib is not None:
            _write_matrix(f, rec.sib)


def read_score_records(f: TextIO) -> list[ScoreRecord]:
    records: list[ScoreRecord] = []
    tokens = _token_stream(f)
    while True:
        header = next(tokens, None)
        if header is None:
            break
        if not header.startswith("#"):
            raise ValueError(f"expected '#id n has_sib' header, got {header!r}")
        sent_id = int(header[1:])
        n = int(next(tokens))
        has_sib = int(next(tokens))
        size = (n + 1) * (n + 1)
        arc = np.array([float(next(tokens)) for _ in range(size)]).reshape(
            n + 1, n + 1
        )
        sib = None
        if has_sib:
            sib = np.array(
                [float(next(tokens)) for _ in range(size * (n + 1))]
            ).reshape(n + 1, n + 1, n + 1)
        records.append(ScoreRecord(sent_id, arc, sib))
    return records


def _token_stream(f: TextIO):
    for line in f:
        yield from line.split()


def write_heads_records(
    f: TextIO, heads_list: Sequence[Sequence[int]], scores: Sequence[float] | None = None
) -> None:
    for idx, heads in enumerate(heads_list):
        if scores is not None:
            f.write(f"#{idx} {len(heads)} {'%.17g' % scores[idx]}\n")
        else:
            f.write(f"#{idx} {len(heads)}\n")
        f.write(" ".join("_" if h == UNKNOWN else str(h) for h in heads) + "\n")


def read_heads_records(f: TextIO) -> list[list[int]]:
    out: list[list[int]] = []
    expect = None
    for line in f:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            expect = int(parts[1])
            continue
        heads = [UNKNOWN if tok == "_" else int(tok) for tok in line.split()]
        if expect is not None and len(heads) != expect:
            raise ValueError(
                f"heads record length {len(heads)} does not match header {expect}"
            )
        out.append(heads)
        expect = None
    return out


def write_value_records(f: TextIO, values: Sequence[float]) -> None:
    for idx, v in enumerate(values):
        f.write(f"{idx} {'%.17g' % v}\n")


def read_value_records(f: TextIO) -> list[float]:
    out = []
    for line in f:
        line = line.strip()
        if not line:
            continue
        _, value = line.split()
        out.append(float(value))
    return out
