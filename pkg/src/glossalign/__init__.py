"""Sequence alignment, monotone data-pair selection and a small gloss seq2seq."""
from .dtw import DtwResult, build_cost_matrix, dtw_align, oracle_align, path_to_alignment_vector
from .losses import (
    LossConfig,
    cross_entropy_alignment,
    l2_loss,
    normalize_alignment,
    sp_loss,
    total_loss,
)
from .selection import (
    DecisionMatrix,
    SelectionInputs,
    SelectionScorer,
    apply_selection,
    decision_to_alignment_vector,
    decode_monotonic,
    score_pairs,
)
from .seqcore import AlignmentPath, AlignmentVector, CostFn, Sequence, local_cost, validate_sequence

__version__ = "0.1.0"
