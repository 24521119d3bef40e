"""Alignment training objectives: cross-entropy, SP-loss, L2 and their weighted total."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .seqcore import AlignmentVector, DomainError, LengthMismatch

DEFAULT_EPSILON = 1e-12


@dataclass(frozen=True)
class LossConfig:
    lambda_ce: float = 1.0
    lambda_sp: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    normalization: str = "min-max"

    def __post_init__(self):
        if self.lambda_ce < 0 or self.lambda_sp < 0:
            raise ValueError("loss weights must be non-negative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.normalization not in ("min-max", "none"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _values(x) -> np.ndarray:
    if isinstance(x, AlignmentVector):
        return x.values
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise LengthMismatch(f"lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] == 0:
        raise LengthMismatch("empty alignment")


def cross_entropy_alignment(predicted, truth, epsilon: float = DEFAULT_EPSILON) -> float:
    """``-(1/Q) * sum(truth * log(max(predicted, epsilon)))`` for a binary ``truth``."""
    p, y = _values(predicted), _values(truth)
    _same_length(p, y)
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise DomainError("predicted values must lie in [0, 1]")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DomainError("truth must be binary")
    total = 0.0
    for pq, yq in zip(p.tolist(), y.tolist()):
        if yq:
            total -= math.log(max(pq, epsilon))
    return total / p.shape[0]


def normalize_alignment(raw, method: str = "min-max") -> AlignmentVector:
    """Min-max rescale to [0, 1]; a constant input maps to all zeros."""
    x = _values(raw)
    if x.shape[0] == 0:
        raise LengthMismatch("cannot normalize an empty vector")
    if method == "none":
        return AlignmentVector.of(x)
    if method != "min-max":
        raise ValueError(f"unknown normalization {method!r}")
    lo, hi = float(np.min(x)), float(np.max(x))
    if hi == lo:
        return AlignmentVector.of(np.zeros_like(x))
    return AlignmentVector.of(np.clip((x - lo) / (hi - lo), 0.0, 1.0))


def _unit_interval(x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("values must lie in [0, 1]")


def sp_loss(truth_norm, predicted_norm) -> float:
    """Mean absolute difference of two normalized alignment vectors."""
    a, b = _values(truth_norm), _values(predicted_norm)
    _same_length(a, b)
    _unit_interval(a)
    _unit_interval(b)
    return float(np.mean(np.abs(a - b)))


def l2_loss(truth, predicted) -> float:
    a, b = _values(truth), _values(predicted)
    _same_length(a, b)
    return float(np.mean((a - b) ** 2))


def total_loss(config: LossConfig, ce: float, sp: float) -> float:
    if not (math.isfinite(ce) and math.isfinite(sp)) or ce < 0 or sp < 0:
        raise DomainError("component losses must be finite and non-negative")
    return config.lambda_ce * ce + config.lambda_sp * sp


# Gradients used by the selection trainer. Each returns (value, d value / d predicted).

def l2_loss_grad(truth, predicted) -> tuple[float, np.ndarray]:
    a, b = _values(truth), _values(predicted)
    _same_length(a, b)
    diff = b - a
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.shape[0]


def min_max_jacobian(x: np.ndarray) -> np.ndarray:
    """d normalize(x) / dx for min-max scaling (zero for a constant vector)."""
    n = x.shape[0]
    lo_i, hi_i = int(np.argmin(x)), int(np.argmax(x))
    r = x[hi_i] - x[lo_i]
    if r == 0.0:
        return np.zeros((n, n))
    J = np.eye(n) / r
    J[:, lo_i] += (x - x[hi_i]) / r ** 2
    J[:, hi_i] += -(x - x[lo_i]) / r ** 2
    return J


def sp_loss_grad(truth, predicted, normalization: str = "min-max") -> tuple[float, np.ndarray]:
    """SP-loss after normalizing both sides, with its gradient w.r.t. the raw prediction."""
    a = normalize_alignment(truth, normalization).values
    raw = _values(predicted)
    b = normalize_alignment(raw, normalization).values
    _same_length(a, b)
    g = np.sign(b - a) / b.shape[0]
    if normalization == "min-max":
        g = g @ min_max_jacobian(raw)
    return float(np.mean(np.abs(a - b))), g
