"""First- and second-order TreeCRF inference for projective dependency parsing."""

__version__ = "0.1.0"

from .core import (
    NEG_INF,
    UNKNOWN,
    ArcScores,
    DepTree,
    LabelScores,
    PartialTree,
    RootPolicy,
    SibScores,
    enumerate_projective_trees,
    extract_sib_triples,
    is_legal_tree,
    is_projective,
    tree_score,
)
from .decode import DecodeResult, eisner1, eisner2, greedy_fast_path, mbr_decode
from .inference import (
    ChartSet,
    InsideResult,
    Marginals,
    constrained_inside,
    inside_first_order,
    inside_first_order_naive,
    inside_second_order,
    marginals,
    marginals_batch,
)
from .loss import (
    LossResult,
    crf_loss,
    crf_loss_batch,
    local_ce_loss,
    partial_crf_loss,
    partial_crf_loss_batch,
)
from .scorer import (
    BiaffineParams,
    ScorerConfig,
    ScoringModel,
    TokenReps,
    TriaffineParams,
    biaffine_score,
    sgd_step,
    triaffine_score,
)
from .treebank import (
    ConllSentence,
    ConllToken,
    Metrics,
    evaluate,
    read_conll,
    sib_prf,
    write_conll,
)

__all__ = [
    "ArcScores",
    "BiaffineParams",
    "ChartSet",
    "ConllSentence",
    "ConllToken",
    "DecodeResult",
    "DepTree",
    "InsideResult",
    "LabelScores",
    "LossResult",
    "Marginals",
    "Metrics",
    "NEG_INF",
    "PartialTree",
    "RootPolicy",
    "ScorerConfig",
    "ScoringModel",
    "SibScores",
    "TokenReps",
    "TriaffineParams",
    "UNKNOWN",
    "biaffine_score",
    "constrained_inside",
    "crf_loss",
    "crf_loss_batch",
    "eisner1",
    "eisner2",
    "enumerate_projective_trees",
    "evaluate",
    "extract_sib_triples",
    "greedy_fast_path",
    "inside_first_order",
    "inside_first_order_naive",
    "inside_second_order",
    "is_legal_tree",
    "is_projective",
    "local_ce_loss",
    "marginals",
    "marginals_batch",
    "mbr_decode",
    "partial_crf_loss",
    "partial_crf_loss_batch",
    "read_conll",
    "sgd_step",
    "sib_prf",
    "tree_score",
    "triaffine_score",
    "write_conll",
]
