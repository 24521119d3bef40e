"""Core sequence types, local cost functions and validation.

Everything downstream (DTW, selection decoding, losses) works on these
immutable containers, so malformed input is rejected here once.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence as Seq

import numpy as np


class AlignmentError(ValueError):
    """Base class for every data error raised by this package."""


class EmptySequence(AlignmentError):
    pass


class RaggedDims(AlignmentError):
    pass


class NonFinite(AlignmentError):
    pass


class DimMismatch(AlignmentError):
    pass


class LengthMismatch(AlignmentError):
    pass


class DomainError(AlignmentError):
    pass


class InvalidPath(AlignmentError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Sequence:
    """A length-T run of F-dimensional real frames, stored as a read-only (T, F) array."""

    frames: np.ndarray

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, i):
        return self.frames[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Sequence):
            return NotImplemented
        return self.frames.shape == other.frames.shape and bool(np.array_equal(self.frames, other.frames))

    def __hash__(self) -> int:
        return hash((self.frames.shape, self.frames.tobytes()))

    def tolist(self) -> list[list[float]]:
        return self.frames.tolist()

    def token_ids(self) -> list[int]:
        """Read a dim-1 integer-valued sequence back as token ids."""
        if self.dim != 1:
            raise DimMismatch(f"token sequences are dim-1, got dim {self.dim}")
        ids = self.frames[:, 0]
        if not np.all(ids == np.round(ids)) or np.any(ids < 0):
            raise DomainError("token frames must be non-negative integers")
        return [int(v) for v in ids]


def validate_sequence(frames) -> Sequence:
    """Build a :class:`Sequence` from nested lists or an array, enforcing its invariants."""
    if isinstance(frames, Sequence):
        return frames
    if isinstance(frames, np.ndarray):
        if frames.ndim != 2:
            if frames.size == 0:
                raise EmptySequence("sequence has no frames")
            raise RaggedDims(f"expected a 2-D (T, F) array, got shape {frames.shape}")
        rows = frames
    else:
        rows = list(frames)
        if not rows:
            raise EmptySequence("sequence has no frames")
        dims = set()
        for row in rows:
            try:
                dims.add(len(row))
            except TypeError:
                raise RaggedDims("every frame must be a list of numbers") from None
        if len(dims) != 1:
            raise RaggedDims(f"frames have differing dimensions {sorted(dims)}")
    try:
        arr = np.array(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise RaggedDims(f"frames are not numeric: {exc}") from None
    if arr.shape[0] == 0:
        raise EmptySequence("sequence has no frames")
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise RaggedDims("frames must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise NonFinite("sequence contains NaN or Inf")
    return Sequence(_frozen(arr.copy()))


def token_sequence(ids: Iterable[int]) -> Sequence:
    return validate_sequence([[int(i)] for i in ids])


class CostFn(enum.Enum):
    ABS_DIFF = "abs"
    EUCLIDEAN = "euclidean"
    TOKEN_MISMATCH = "token"

    @classmethod
    def parse(cls, name: "str | CostFn") -> "CostFn":
        if isinstance(name, CostFn):
            return name
        aliases = {"abs": cls.ABS_DIFF, "abs-diff": cls.ABS_DIFF, "euclidean": cls.EUCLIDEAN,
                   "token": cls.TOKEN_MISMATCH, "token-mismatch": cls.TOKEN_MISMATCH}
        try:
            return aliases[name]
        except KeyError:
            raise ValueError(f"unknown cost function {name!r}") from None


def local_cost(a, b, fn: CostFn = CostFn.ABS_DIFF) -> float:
    """Distance between two frames.

    ``abs-diff`` is the L1 distance (|a - b| for scalars), ``euclidean`` the
    L2 distance, ``token-mismatch`` is 0 for identical frames and 1 otherwise.
    """
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise DimMismatch(f"frame dims differ: {a.shape[0]} vs {b.shape[0]}")
    fn = CostFn.parse(fn)
    if fn is CostFn.ABS_DIFF:
        return float(np.sum(np.abs(a - b)))
    if fn is CostFn.EUCLIDEAN:
        return float(math.sqrt(float(np.sum((a - b) ** 2))))
    return 0.0 if np.array_equal(a, b) else 1.0


@dataclass(frozen=True)
class AlignmentPath:
    """Monotone warping path through a Q x T grid, 1-based ``(q, t)`` steps."""

    steps: tuple[tuple[int, int], ...]
    q_len: int
    t_len: int

    def __post_init__(self):
        check_path(self.steps, self.q_len, self.t_len)

    def __len__(self) -> int:
        return len(self.steps)

    def transpose(self) -> "AlignmentPath":
        return AlignmentPath(tuple((t, q) for q, t in self.steps), self.t_len, self.q_len)


_STEPS = {(1, 0), (0, 1), (1, 1)}


def check_path(steps: Seq[tuple[int, int]], q_len: int, t_len: int) -> None:
    """Raise :class:`InvalidPath` unless ``steps`` is a valid warping path."""
    if q_len < 1 or t_len < 1:
        raise InvalidPath("grid must be at least 1x1")
    if not steps:
        raise InvalidPath("empty path")
    if tuple(steps[0]) != (1, 1):
        raise InvalidPath(f"path must start at (1, 1), starts at {steps[0]}")
    if tuple(steps[-1]) != (q_len, t_len):
        raise InvalidPath(f"path must end at ({q_len}, {t_len}), ends at {steps[-1]}")
    for (q0, t0), (q1, t1) in zip(steps, steps[1:]):
        if (q1 - q0, t1 - t0) not in _STEPS:
            raise InvalidPath(f"illegal step {(q0, t0)} -> {(q1, t1)}")
    # with unit steps from (1,1) to (Q,T) every row and column is covered


@dataclass(frozen=True, eq=False)
class AlignmentVector:
    """Per-target-step alignment values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 1 or v.shape[0] < 1:
            raise EmptySequence("alignment vector must be 1-D and non-empty")
        if not np.all(np.isfinite(v)) or np.any(v < 0.0) or np.any(v > 1.0):
            raise DomainError("alignment values must lie in [0, 1]")

    @classmethod
    def of(cls, values) -> "AlignmentVector":
        if isinstance(values, AlignmentVector):
            return values
        return cls(_frozen(np.array(values, dtype=np.float64).reshape(-1)))

    @property
    def q_len(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.q_len

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlignmentVector):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def tolist(self) -> list[float]:
        return self.values.tolist()
