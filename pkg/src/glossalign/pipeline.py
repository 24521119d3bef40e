"""DTW-supervised training of the pair scorer, dataset filtering and the four-mode comparison.

Modes:

* ``base`` - all pairs, scorer trained with L2 on the soft expected position
* ``ds``   - pairs filtered by DTW cost, L2 objective
* ``rf``   - all pairs, cross-entropy against the DTW path (+ weighted SP-loss)
* ``dsrf`` - filtering and the DTW-supervised objective together
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dtw import dtw_align, path_rows, path_to_alignment_vector
from .losses import LossConfig, l2_loss_grad, sp_loss_grad, total_loss
from .selection import SelectionInputs, SelectionScorer, decode_monotonic, score_pairs
from .seqcore import AlignmentError, AlignmentPath, AlignmentVector, CostFn, Sequence, validate_sequence

MODES = ("base", "ds", "rf", "dsrf")
DEFAULT_THRESHOLD = 0.5


class MissingTarget(AlignmentError):
    pass


@dataclass(frozen=True)
class PairRecord:
    id: str
    source: Sequence
    summary: Sequence
    gloss: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise AlignmentError("pair id must be non-empty")

    @classmethod
    def of(cls, id: str, source, summary, gloss=None) -> "PairRecord":
        return cls(str(id), validate_sequence(source), validate_sequence(summary),
                   None if gloss is None else tuple(int(g) for g in gloss))

    def to_json(self) -> dict:
        d = {"id": self.id, "source": self.source.tolist(), "summary": self.summary.tolist()}
        if self.gloss is not None:
            d["gloss"] = list(self.gloss)
        return d


@dataclass(frozen=True)
class Target:
    path: AlignmentPath
    truth_vec: AlignmentVector
    cost: float
    norm_cost: float


def check_unique_ids(dataset) -> None:
    seen = set()
    for rec in dataset:
        if rec.id in seen:
            raise AlignmentError(f"duplicate pair id {rec.id!r}")
        seen.add(rec.id)


def precompute_targets(dataset, fn: CostFn = CostFn.EUCLIDEAN) -> dict[str, Target]:
    """DTW path (summary rows, source columns), its 1-D reduction and length-normalized cost per pair."""
    check_unique_ids(dataset)
    targets = {}
    for rec in dataset:
        res = dtw_align(rec.summary, rec.source, fn)
        q, t = rec.summary.length, rec.source.length
        targets[rec.id] = Target(res.path, path_to_alignment_vector(res.path), res.cost, res.cost / (q + t))
    return targets


def filter_dataset(dataset, targets: dict[str, Target], threshold: float = DEFAULT_THRESHOLD) -> list:
    """Keep pairs whose normalized DTW cost is at most ``threshold``, in input order."""
    kept = []
    for rec in dataset:
        try:
            target = targets[rec.id]
        except KeyError:
            raise MissingTarget(f"no DTW target for pair {rec.id!r}") from None
        if target.norm_cost <= threshold:
            kept.append(rec)
    return kept


@dataclass(frozen=True)
class RunConfig:
    mode: str = "dsrf"
    loss: LossConfig = field(default_factory=LossConfig)
    epochs: int = 40
    lr: float = 0.5
    seed: int = 0
    filter_threshold: float = DEFAULT_THRESHOLD
    momentum: float = 0.9

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.lr >= 0:
            raise ValueError("lr must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")

    @property
    def filters(self) -> bool:
        return self.mode in ("ds", "dsrf")

    @property
    def dtw_supervised(self) -> bool:
        return self.mode in ("rf", "dsrf")

    def to_dict(self) -> dict:
        return {"mode": self.mode, "loss": self.loss.to_dict(), "epochs": self.epochs, "lr": self.lr,
                "seed": self.seed, "filter_threshold": self.filter_threshold, "momentum": self.momentum}


@dataclass
class EpochReport:
    epoch: int
    loss: float
    accuracy: float
    pairs_retained: int
    seconds: float

    def to_dict(self, timing: bool = False) -> dict:
        d = {"epoch": self.epoch, "loss": self.loss, "accuracy": self.accuracy,
             "pairs_retained": self.pairs_retained}
        if timing:
            d["seconds"] = self.seconds
        return d


def _row_softmax(S: np.ndarray) -> np.ndarray:
    z = S - S.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def pair_objective(scorer: SelectionScorer, rec: PairRecord, target: Target, config: RunConfig):
    """Training loss for one pair and its gradient w.r.t. the scorer (dW, db)."""
    R, H = rec.summary.frames, rec.source.frames
    S = score_pairs(scorer, SelectionInputs(rec.summary, rec.source))
    P = _row_softmax(S)
    Q, T = S.shape
    positions = np.arange(1, T + 1) / T
    expected = P @ positions
    d_expected = None
    if config.dtw_supervised:
        mask = np.zeros((Q, T))
        for q, cols in enumerate(path_rows(target.path)):
            mask[q, cols] = 1.0
        mass = (P * mask).sum(axis=1)
        eps = config.loss.epsilon
        ce = -float(np.mean(np.log(np.maximum(mass, eps))))
        dmass = np.where(mass > eps, -1.0 / (Q * np.maximum(mass, eps)), 0.0)
        # d log-mass / dS = P * (mask - mass) restricted through the row softmax
        dS = config.loss.lambda_ce * dmass[:, None] * P * (mask - mass[:, None])
        sp, g_sp = sp_loss_grad(target.truth_vec, expected, config.loss.normalization)
        loss = total_loss(config.loss, ce, sp)
        d_expected = config.loss.lambda_sp * g_sp
    else:
        loss, d_expected = l2_loss_grad(target.truth_vec, expected)
        dS = np.zeros_like(S)
    dS = dS + d_expected[:, None] * P * (positions[None, :] - expected[:, None])
    dW = R.T @ dS @ H
    return loss, dW, float(dS.sum())


def evaluate_accuracy(scorer: SelectionScorer, dataset, targets: dict[str, Target]) -> float:
    """Share of summary steps whose decoded source step lies on the DTW path."""
    hits, total = 0, 0
    for rec in dataset:
        S = score_pairs(scorer, SelectionInputs(rec.summary, rec.source))
        decision = decode_monotonic(S)
        rows = path_rows(targets[rec.id].path)
        for q, t in enumerate(decision.rows):
            hits += (t - 1) in rows[q]
        total += len(rows)
    return hits / total if total else 0.0


def train_result_filter(
    dataset,
    targets: dict[str, Target],
    config: RunConfig,
    eval_set=None,
    eval_targets: dict[str, Target] | None = None,
) -> tuple[SelectionScorer, list[EpochReport]]:
    """Full-batch gradient descent with momentum on the per-mode objective.

    Accuracy is measured on ``eval_set`` (default: the training pairs that
    were kept).
    """
    if not dataset:
        raise ValueError("dataset is empty")
    train_set = filter_dataset(dataset, targets, config.filter_threshold) if config.filters else list(dataset)
    if eval_set is None:
        eval_set, eval_targets = train_set, targets
    elif eval_targets is None:
        eval_targets = precompute_targets(eval_set)
    dim = dataset[0].source.dim
    scorer = SelectionScorer.init(dim, config.seed)
    vW = np.zeros_like(scorer.weight)
    vb = 0.0
    reports = []
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        gW = np.zeros_like(scorer.weight)
        gb = 0.0
        total = 0.0
        for rec in train_set:
            loss, dW, db = pair_objective(scorer, rec, targets[rec.id], config)
            total += loss
            gW += dW
            gb += db
        n = max(len(train_set), 1)
        vW = config.momentum * vW - config.lr * gW / n
        vb = config.momentum * vb - config.lr * gb / n
        scorer.weight += vW
        scorer.bias += vb
        acc = evaluate_accuracy(scorer, eval_set, eval_targets)
        reports.append(EpochReport(epoch, total / n, acc, len(train_set), time.perf_counter() - started))
    return scorer, reports


def run_efficiency_experiment(
    dataset,
    budget: int,
    seed: int,
    lr: float = 0.5,
    loss: LossConfig | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    eval_set=None,
    modes=MODES,
) -> dict[str, list[EpochReport]]:
    """Train one scorer per mode under the same seed and epoch budget."""
    loss = loss or LossConfig()
    targets = precompute_targets(dataset)
    if eval_set is None:
        eval_set = filter_dataset(dataset, targets, threshold)
        eval_targets = {r.id: targets[r.id] for r in eval_set}
    else:
        eval_targets = precompute_targets(eval_set)
    results = {}
    for mode in modes:
        config = RunConfig(mode=mode, loss=loss, epochs=budget, lr=lr, seed=seed, filter_threshold=threshold)
        _, reports = train_result_filter(dataset, targets, config, eval_set, eval_targets)
        results[mode] = reports
    return results


def final_accuracy(results: dict[str, list[EpochReport]]) -> dict[str, float]:
    return {mode: reports[-1].accuracy for mode, reports in results.items()}


def benchmark_records(pairs) -> list[PairRecord]:
    return [PairRecord.of(p.id, p.source, p.summary) for p in pairs]

