"""Data-pair selection: bilinear pair scoring and monotone binary decoding.

A decision assigns exactly one source step ``t(q)`` to every summary step
``q`` with ``t(1) <= t(2) <= ... <= t(Q)``; as a Q x T 0/1 matrix it has one
1 per row. Applying it to a source sequence picks (and may repeat) rows.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .seqcore import (
    AlignmentVector,
    DimMismatch,
    DomainError,
    LengthMismatch,
    Sequence,
    validate_sequence,
)


@dataclass(frozen=True)
class SelectionInputs:
    summary_repr: Sequence
    source_hidden: Sequence

    def __post_init__(self):
        if self.summary_repr.dim != self.source_hidden.dim:
            raise DimMismatch(
                f"summary dim {self.summary_repr.dim} != source dim {self.source_hidden.dim}"
            )

    @classmethod
    def of(cls, summary, source) -> "SelectionInputs":
        return cls(validate_sequence(summary), validate_sequence(source))


@dataclass(frozen=True)
class DecisionMatrix:
    """Selected 1-based source index per summary step."""

    rows: tuple[int, ...]
    t_len: int

    def __post_init__(self):
        if not self.rows:
            raise DomainError("decision needs at least one row")
        if any(t < 1 or t > self.t_len for t in self.rows):
            raise DomainError(f"selected indices must lie in 1..{self.t_len}")
        if any(b < a for a, b in zip(self.rows, self.rows[1:])):
            raise DomainError("selected indices must be non-decreasing")

    @property
    def q_len(self) -> int:
        return len(self.rows)

    def to_matrix(self) -> np.ndarray:
        m = np.zeros((self.q_len, self.t_len))
        m[np.arange(self.q_len), np.asarray(self.rows) - 1] = 1.0
        return m


@dataclass
class SelectionScorer:
    """``s(q, t) = summary[q] @ weight @ source[t] + bias``."""

    weight: np.ndarray
    bias: float = 0.0
    seed: int | None = None

    @classmethod
    def init(cls, dim: int, seed: int, scale: float = 0.1) -> "SelectionScorer":
        rng = np.random.default_rng(seed)
        return cls(weight=rng.normal(0.0, scale, size=(dim, dim)), bias=0.0, seed=seed)

    @property
    def dim(self) -> int:
        return self.weight.shape[0]

    def copy(self) -> "SelectionScorer":
        return SelectionScorer(self.weight.copy(), float(self.bias), self.seed)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "seed": self.seed, "bias": float(self.bias),
                "weight": self.weight.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionScorer":
        w = np.array(d["weight"], dtype=np.float64).reshape(d["dim"], d["dim"])
        return cls(weight=w, bias=float(d["bias"]), seed=d.get("seed"))


def score_pairs(scorer: SelectionScorer, inputs: SelectionInputs) -> np.ndarray:
    R = inputs.summary_repr.frames
    H = inputs.source_hidden.frames
    if R.shape[1] != scorer.dim:
        raise DimMismatch(f"scorer expects dim {scorer.dim}, inputs have dim {R.shape[1]}")
    return R @ scorer.weight @ H.T + scorer.bias


def decode_monotonic(scores) -> DecisionMatrix:
    """Best non-decreasing assignment of source steps to summary rows.

    Totals are accumulated row by row in the forward direction. Among
    assignments with the maximal total the lexicographically smallest one is
    returned.
    """
    S = np.asarray(scores, dtype=np.float64)
    if S.ndim != 2 or S.size == 0:
        raise DomainError("scores must be a non-empty 2-D grid")
    if not np.all(np.isfinite(S)):
        raise DomainError("scores must be finite")
    Q, T = S.shape
    rows = S.tolist()
    # best[q][t]: best total of rows 0..q with row q assigned to t.
    # run[q][t]: max of best[q][0..t].
    best = [rows[0][:]]
    run = [list(itertools.accumulate(best[0], max))]
    for q in range(1, Q):
        prev = run[-1]
        cur = [prev[t] + rows[q][t] for t in range(T)]
        best.append(cur)
        run.append(list(itertools.accumulate(cur, max)))

    # Cells that lie on at least one optimal assignment, walking back from the end.
    total = run[-1][-1]
    on_opt = [set() for _ in range(Q)]
    on_opt[-1] = {t for t in range(T) if best[-1][t] == total}
    for q in range(Q - 1, 0, -1):
        keep = set()
        for t in on_opt[q]:
            target = run[q - 1][t]
            keep.update(u for u in range(t + 1) if best[q - 1][u] == target)
        on_opt[q - 1] = keep

    chosen = [min(on_opt[0])]
    for q in range(1, Q):
        t_prev = chosen[-1]
        chosen.append(min(t for t in on_opt[q] if t >= t_prev and run[q - 1][t] == best[q - 1][t_prev]))
    return DecisionMatrix(tuple(t + 1 for t in chosen), T)


def decision_score(scores, decision: DecisionMatrix) -> float:
    total = 0.0
    S = np.asarray(scores, dtype=np.float64)
    for q, t in enumerate(decision.rows):
        total += float(S[q, t - 1])
    return total


def brute_force_decode(scores) -> tuple[float, DecisionMatrix]:
    """Enumerate every non-decreasing assignment; small grids only."""
    S = np.asarray(scores, dtype=np.float64)
    Q, T = S.shape
    best_total, best_rows = None, None
    # combinations_with_replacement yields sorted tuples in lexicographic order
    for rows in itertools.combinations_with_replacement(range(T), Q):
        total = 0.0
        for q, t in enumerate(rows):
            total += float(S[q, t])
        if best_total is None or total > best_total:
            best_total, best_rows = total, rows
    return best_total, DecisionMatrix(tuple(t + 1 for t in best_rows), T)


def apply_selection(decision: DecisionMatrix, source_pairs) -> Sequence:
    """Rows of ``source_pairs`` picked by the decision (the product of the 0/1 matrix with Y)."""
    Y = validate_sequence(source_pairs)
    if decision.t_len != Y.length:
        raise LengthMismatch(f"decision spans {decision.t_len} source steps, sequence has {Y.length}")
    return validate_sequence(Y.frames[np.asarray(decision.rows) - 1])


def decision_to_alignment_vector(decision: DecisionMatrix) -> AlignmentVector:
    return AlignmentVector.of([t / decision.t_len for t in decision.rows])
