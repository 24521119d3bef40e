"""Dynamic time warping with deterministic backtracking, plus a brute-force oracle."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .seqcore import (
    AlignmentError,
    AlignmentPath,
    AlignmentVector,
    CostFn,
    DimMismatch,
    Sequence,
    validate_sequence,
)

ORACLE_MAX_LEN = 7


class TooLargeForOracle(AlignmentError):
    pass


@dataclass(frozen=True)
class DtwResult:
    cost: float
    path: AlignmentPath


def build_cost_matrix(target, source, fn: CostFn = CostFn.ABS_DIFF) -> np.ndarray:
    """Q x T matrix of local costs, rows indexed by target frames."""
    target = validate_sequence(target)
    source = validate_sequence(source)
    if target.dim != source.dim:
        raise DimMismatch(f"target dim {target.dim} != source dim {source.dim}")
    fn = CostFn.parse(fn)
    diff = target.frames[:, None, :] - source.frames[None, :, :]
    if fn is CostFn.ABS_DIFF:
        cost = np.sum(np.abs(diff), axis=-1)
    elif fn is CostFn.EUCLIDEAN:
        cost = np.sqrt(np.sum(diff ** 2, axis=-1))
    else:
        cost = np.any(diff != 0.0, axis=-1).astype(np.float64)
    cost.setflags(write=False)
    return cost


def accumulate(cost: np.ndarray) -> list[list[float]]:
    """Accumulated-cost table D with D[q][t] the cheapest path cost from (0, 0) to (q, t)."""
    rows = cost.tolist()
    Q, T = len(rows), len(rows[0])
    D = [[0.0] * T for _ in range(Q)]
    first = rows[0]
    acc = D[0]
    acc[0] = first[0]
    for t in range(1, T):
        acc[t] = acc[t - 1] + first[t]
    for q in range(1, Q):
        prev, cur, c = D[q - 1], D[q], rows[q]
        cur[0] = prev[0] + c[0]
        for t in range(1, T):
            best = prev[t - 1]
            if cur[t - 1] < best:
                best = cur[t - 1]
            if prev[t] < best:
                best = prev[t]
            cur[t] = best + c[t]
    return D


def backtrack(D: list[list[float]]) -> list[tuple[int, int]]:
    # Preference among equal predecessors: diagonal, then the one that
    # advanced t (same row), then the one that advanced q (same column).
    q, t = len(D) - 1, len(D[0]) - 1
    steps = [(q + 1, t + 1)]
    while q > 0 or t > 0:
        if q == 0:
            t -= 1
        elif t == 0:
            q -= 1
        else:
            diag, left, up = D[q - 1][t - 1], D[q][t - 1], D[q - 1][t]
            if diag <= left and diag <= up:
                q, t = q - 1, t - 1
            elif left <= up:
                t -= 1
            else:
                q -= 1
        steps.append((q + 1, t + 1))
    steps.reverse()
    return steps


def dtw_from_cost(cost: np.ndarray) -> DtwResult:
    D = accumulate(cost)
    steps = backtrack(D)
    Q, T = cost.shape
    return DtwResult(cost=D[-1][-1], path=AlignmentPath(tuple(steps), Q, T))


def dtw_align(target, source, fn: CostFn = CostFn.ABS_DIFF) -> DtwResult:
    """Minimum-cost warping path between ``target`` (rows) and ``source`` (columns).

    Steps are (1,0), (0,1) and (1,1); the path cost is the plain sum of the
    visited local costs.

    >>> dtw_align([[5.0]], [[1.0], [2.0]]).cost
    7.0
    """
    return dtw_from_cost(build_cost_matrix(target, source, fn))


@lru_cache(maxsize=None)
def _all_paths(q_len: int, t_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Every warping path on a q_len x t_len grid.

    Returns a (P, L) array of flat cell indices, padded with ``q_len * t_len``
    (a sentinel slot holding cost 0), and the path lengths.
    """
    paths: list[list[int]] = []

    def walk(q: int, t: int, acc: list[int]) -> None:
        acc.append(q * t_len + t)
        if q == q_len - 1 and t == t_len - 1:
            paths.append(list(acc))
        else:
            if q + 1 < q_len and t + 1 < t_len:
                walk(q + 1, t + 1, acc)
            if t + 1 < t_len:
                walk(q, t + 1, acc)
            if q + 1 < q_len:
                walk(q + 1, t, acc)
        acc.pop()

    walk(0, 0, [])
    longest = q_len + t_len - 1
    flat = np.full((len(paths), longest), q_len * t_len, dtype=np.intp)
    lengths = np.empty(len(paths), dtype=np.intp)
    for i, p in enumerate(paths):
        flat[i, : len(p)] = p
        lengths[i] = len(p)
    flat.setflags(write=False)
    lengths.setflags(write=False)
    return flat, lengths


def count_paths(q_len: int, t_len: int) -> int:
    return _all_paths(q_len, t_len)[0].shape[0]


def oracle_from_cost(cost: np.ndarray) -> DtwResult:
    Q, T = cost.shape
    if Q > ORACLE_MAX_LEN or T > ORACLE_MAX_LEN:
        raise TooLargeForOracle(f"oracle enumerates paths only up to {ORACLE_MAX_LEN}x{ORACLE_MAX_LEN}, got {Q}x{T}")
    flat, lengths = _all_paths(Q, T)
    cells = np.append(np.asarray(cost, dtype=np.float64).ravel(), 0.0)
    totals = np.zeros(flat.shape[0])
    # Sum left to right, one path position at a time, so each total is the
    # same sequence of float additions a forward recursion would perform.
    for k in range(flat.shape[1]):
        totals += cells[flat[:, k]]
    best = int(np.argmin(totals))
    steps = tuple((int(i) // T + 1, int(i) % T + 1) for i in flat[best, : lengths[best]])
    return DtwResult(cost=float(totals[best]), path=AlignmentPath(steps, Q, T))


def oracle_align(target, source, fn: CostFn = CostFn.ABS_DIFF) -> DtwResult:
    """Exhaustive minimum over every warping path. Test-only; Q, T <= 7."""
    target = validate_sequence(target)
    source = validate_sequence(source)
    if target.length > ORACLE_MAX_LEN or source.length > ORACLE_MAX_LEN:
        raise TooLargeForOracle(
            f"oracle enumerates paths only up to {ORACLE_MAX_LEN}x{ORACLE_MAX_LEN}, "
            f"got {target.length}x{source.length}"
        )
    return oracle_from_cost(build_cost_matrix(target, source, fn))


def path_cost(cost: np.ndarray, path: AlignmentPath) -> float:
    total = 0.0
    for q, t in path.steps:
        total += float(cost[q - 1, t - 1])
    return total


def last_source_index(path: AlignmentPath) -> list[int]:
    """Largest 1-based source index visited in each target row."""
    t_last = [0] * path.q_len
    for q, t in path.steps:
        if t > t_last[q - 1]:
            t_last[q - 1] = t
    return t_last


def path_to_alignment_vector(path: AlignmentPath) -> AlignmentVector:
    """Reduce a 2-D path to ``t_last(q) / T`` per target row."""
    T = path.t_len
    return AlignmentVector.of([t / T for t in last_source_index(path)])


def path_rows(path: AlignmentPath) -> list[list[int]]:
    """0-based source columns visited in each target row."""
    rows: list[list[int]] = [[] for _ in range(path.q_len)]
    for q, t in path.steps:
        rows[q - 1].append(t - 1)
    return rows
