"""Seeded synthetic datasets: gloss tasks and the corrupted-pairs alignment benchmark."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gloss import Vocabulary

FIRST_CONTENT = 3


def copy_task(n_pairs: int = 500, vocab_size: int = 20, max_len: int = 8, seed: int = 0):
    """Random token sentences whose gloss is the sentence itself."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_pairs):
        n = int(rng.integers(1, max_len + 1))
        ids = rng.integers(FIRST_CONTENT, vocab_size, size=n).tolist()
        pairs.append((ids, list(ids)))
    return pairs


def modifier_tokens(vocab_size: int, n_modifiers: int = 5) -> set[int]:
    """The top ``n_modifiers`` ids of the vocabulary act as modifiers."""
    return set(range(vocab_size - n_modifiers, vocab_size))


def summarize_task(
    n_pairs: int = 500,
    vocab_size: int = 20,
    max_len: int = 8,
    n_modifiers: int = 5,
    seed: int = 0,
):
    """Sentences mixing content and modifier tokens; the gloss keeps content tokens only.

    Every sentence holds at least one content token, so no gloss is empty.
    """
    rng = np.random.default_rng(seed)
    mods = modifier_tokens(vocab_size, n_modifiers)
    content = [i for i in range(FIRST_CONTENT, vocab_size) if i not in mods]
    modifiers = sorted(mods)
    pairs = []
    for _ in range(n_pairs):
        n = int(rng.integers(1, max_len + 1))
        is_mod = rng.random(n) < 0.35
        is_mod[int(rng.integers(n))] = False
        ids = [int(rng.choice(modifiers)) if m else int(rng.choice(content)) for m in is_mod]
        pairs.append((ids, [i for i in ids if i not in mods]))
    return pairs


def task_vocabulary(vocab_size: int = 20) -> Vocabulary:
    return Vocabulary.synthetic(vocab_size)


@dataclass
class BenchmarkPair:
    id: str
    source: np.ndarray
    summary: np.ndarray
    corrupted: bool


def _trajectory(rng: np.random.Generator, length: int, dim: int, n_anchors: int) -> np.ndarray:
    anchors = rng.normal(size=(n_anchors, dim))
    knots = np.linspace(0.0, 1.0, n_anchors)
    grid = np.linspace(0.0, 1.0, length)
    path = np.stack([np.interp(grid, knots, anchors[:, f]) for f in range(dim)], axis=1)
    return path / np.linalg.norm(path, axis=1, keepdims=True)


def corrupted_pairs(
    n_pairs: int = 200,
    corrupt_fraction: float = 0.1,
    dim: int = 8,
    source_len: tuple[int, int] = (20, 30),
    n_anchors: int = 6,
    summary_fraction: float = 0.4,
    noise: float = 0.05,
    seed: int = 0,
) -> list[BenchmarkPair]:
    """Source/summary pairs where each summary is a noisy ordered subsample of its source.

    Sources are unit-norm frames along a piecewise-linear path through random
    anchors. A ``corrupt_fraction`` share of pairs get their source frames
    shuffled, which breaks the temporal correspondence.
    """
    rng = np.random.default_rng(seed)
    n_bad = int(round(corrupt_fraction * n_pairs))
    bad = set(rng.choice(n_pairs, size=n_bad, replace=False).tolist())
    pairs = []
    for i in range(n_pairs):
        T = int(rng.integers(source_len[0], source_len[1] + 1))
        src = _trajectory(rng, T, dim, n_anchors)
        Q = max(3, int(round(summary_fraction * T)))
        idx = np.sort(rng.choice(T, size=Q, replace=False))
        summ = src[idx] + rng.normal(0.0, noise, size=(Q, dim))
        summ /= np.linalg.norm(summ, axis=1, keepdims=True)
        corrupted = i in bad
        if corrupted:
            perm = rng.permutation(T)
            while np.array_equal(perm, np.arange(T)):
                perm = rng.permutation(T)
            src = src[perm]
        pairs.append(BenchmarkPair(f"pair-{i:04d}", src, summ, corrupted))
    return pairs
