"""Equivalence suites pitting the DP routines against exhaustive enumeration."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dtw import ORACLE_MAX_LEN, dtw_align, oracle_align
from .selection import brute_force_decode, decision_score, decode_monotonic
from .seqcore import CostFn, validate_sequence


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        status = "PASS" if self.ok else f"FAIL ({len(self.failures)} mismatches)"
        return f"{self.name}: {self.checked} cases {status}"


def all_sequences(alphabet, max_len: int):
    for n in range(1, max_len + 1):
        for seq in itertools.product(alphabet, repeat=n):
            yield validate_sequence([[float(v)] for v in seq])


def dtw_exhaustive(max_len: int = 5, alphabet=(0, 1, 2), fn: CostFn = CostFn.ABS_DIFF) -> SuiteResult:
    """Every pair of integer sequences up to ``max_len`` over ``alphabet``."""
    if max_len > ORACLE_MAX_LEN:
        raise ValueError(f"max_len must be <= {ORACLE_MAX_LEN}")
    result = SuiteResult(f"dtw exhaustive (len<={max_len}, alphabet {list(alphabet)})")
    seqs = list(all_sequences(alphabet, max_len))
    for a in seqs:
        for b in seqs:
            got, want = dtw_align(a, b, fn).cost, oracle_align(a, b, fn).cost
            result.checked += 1
            if got != want:
                result.failures.append((a.tolist(), b.tolist(), got, want))
    return result


def dtw_random(n: int = 1000, max_len: int = 7, dim: int = 1, seed: int = 0,
               fn: CostFn = CostFn.ABS_DIFF) -> SuiteResult:
    result = SuiteResult(f"dtw random real (n={n}, len<={max_len})")
    rng = np.random.default_rng(seed)
    for _ in range(n):
        q, t = rng.integers(1, max_len + 1, size=2)
        a = validate_sequence(rng.normal(size=(q, dim)))
        b = validate_sequence(rng.normal(size=(t, dim)))
        got, want = dtw_align(a, b, fn).cost, oracle_align(a, b, fn).cost
        result.checked += 1
        if got != want:
            result.failures.append((a.tolist(), b.tolist(), got, want))
    return result


def decode_random(n: int = 500, max_len: int = 5, seed: int = 0) -> SuiteResult:
    result = SuiteResult(f"monotone decode random (n={n}, Q,T<={max_len})")
    rng = np.random.default_rng(seed)
    for i in range(n):
        q, t = rng.integers(1, max_len + 1, size=2)
        # every fourth grid is integer-valued so exact ties are exercised too
        scores = rng.integers(-2, 3, size=(q, t)).astype(float) if i % 4 == 0 else rng.normal(size=(q, t))
        decision = decode_monotonic(scores)
        best, lexmin = brute_force_decode(scores)
        result.checked += 1
        if decision_score(scores, decision) != best or decision != lexmin:
            result.failures.append((scores.tolist(), decision.rows, lexmin.rows))
    return result


def run_all(max_len: int = 5, n_random: int = 1000, n_decode: int = 500, seed: int = 0) -> list[SuiteResult]:
    return [
        dtw_exhaustive(max_len),
        dtw_random(n_random, max_len=ORACLE_MAX_LEN, seed=seed),
        dtw_random(n_random // 4, max_len=ORACLE_MAX_LEN, dim=3, seed=seed + 1, fn=CostFn.EUCLIDEAN),
        decode_random(n_decode, max_len=max_len, seed=seed),
    ]
