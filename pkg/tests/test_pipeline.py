import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glossalign import pipeline as pl
from glossalign.dtw import oracle_align
from glossalign.losses import LossConfig
from glossalign.seqcore import AlignmentError, CostFn
from glossalign.synthetic import corrupted_pairs


@pytest.fixture(scope="module")
def bench():
    pairs = corrupted_pairs(40, seed=4)
    recs = pl.benchmark_records(pairs)
    return pairs, recs, pl.precompute_targets(recs)


def test_precompute_identity_pair():
    rec = pl.PairRecord.of("same", [[1.0], [2.0], [4.0]], [[1.0], [2.0], [4.0]])
    t = pl.precompute_targets([rec])["same"]
    assert t.norm_cost == 0
    assert t.path.steps == ((1, 1), (2, 2), (3, 3))
    assert pl.precompute_targets([]) == {}


def test_precompute_small_pairs_match_oracle():
    rng = np.random.default_rng(0)
    recs = [pl.PairRecord.of(f"p{i}", rng.normal(size=(rng.integers(1, 7), 2)), rng.normal(size=(rng.integers(1, 7), 2)))
            for i in range(30)]
    targets = pl.precompute_targets(recs)
    for rec in recs:
        want = oracle_align(rec.summary, rec.source, CostFn.EUCLIDEAN).cost
        assert targets[rec.id].cost == want
        assert targets[rec.id].norm_cost == want / (rec.summary.length + rec.source.length)
        v = targets[rec.id].truth_vec.values
        assert np.all(np.diff(v) >= 0) and v[0] > 0 and v[-1] == 1


def test_precompute_is_order_independent(bench):
    _, recs, targets = bench
    again = pl.precompute_targets(list(reversed(recs)))
    assert again.keys() == targets.keys()
    for k in targets:
        assert again[k] == targets[k]


def test_duplicate_ids_rejected():
    rec = pl.PairRecord.of("x", [[1.0]], [[1.0]])
    with pytest.raises(AlignmentError):
        pl.precompute_targets([rec, rec])
    with pytest.raises(AlignmentError):
        pl.PairRecord.of("", [[1.0]], [[1.0]])


def test_filter_threshold_extremes(bench):
    _, recs, targets = bench
    assert pl.filter_dataset(recs, targets, math.inf) == recs
    assert pl.filter_dataset(recs, targets, -1) == []
    with pytest.raises(pl.MissingTarget):
        pl.filter_dataset(recs, {}, 0.5)


@settings(max_examples=30)
@given(st.floats(0, 1), st.floats(0, 1))
def test_filter_monotone_in_threshold(t1, t2):
    recs = pl.benchmark_records(corrupted_pairs(20, seed=9))
    targets = pl.precompute_targets(recs)
    lo, hi = sorted((t1, t2))
    small = {r.id for r in pl.filter_dataset(recs, targets, lo)}
    large = {r.id for r in pl.filter_dataset(recs, targets, hi)}
    assert small <= large


def test_clean_data_fully_retained():
    recs = pl.benchmark_records(corrupted_pairs(60, corrupt_fraction=0.0, seed=2))
    assert len(pl.filter_dataset(recs, pl.precompute_targets(recs))) == 60


def test_filter_removes_shuffled_pairs(bench):
    pairs, recs, targets = bench
    kept = {r.id for r in pl.filter_dataset(recs, targets)}
    assert all(p.id not in kept for p in pairs if p.corrupted)
    assert all(p.id in kept for p in pairs if not p.corrupted)


def test_run_config_validation():
    with pytest.raises(ValueError):
        pl.RunConfig(mode="bogus")
    with pytest.raises(ValueError):
        pl.RunConfig(epochs=0)
    with pytest.raises(ValueError):
        pl.RunConfig(lr=-1)


def test_train_lr_zero_is_flat(bench):
    _, recs, targets = bench
    _, reports = pl.train_result_filter(recs, targets, pl.RunConfig(mode="rf", epochs=3, lr=0.0))
    assert len({r.loss for r in reports}) == 1


def test_train_reduces_ce_on_clean_data():
    recs = pl.benchmark_records(corrupted_pairs(40, corrupt_fraction=0.0, seed=1))
    targets = pl.precompute_targets(recs)
    config = pl.RunConfig(mode="rf", epochs=10, loss=LossConfig(lambda_sp=0.0))
    _, reports = pl.train_result_filter(recs, targets, config)
    assert reports[-1].loss < reports[0].loss
    assert reports[-1].accuracy > reports[0].accuracy


def test_train_is_deterministic(bench):
    _, recs, targets = bench
    config = pl.RunConfig(mode="dsrf", epochs=4, seed=3)
    s1, r1 = pl.train_result_filter(recs, targets, config)
    s2, r2 = pl.train_result_filter(recs, targets, config)
    assert [r.to_dict() for r in r1] == [r.to_dict() for r in r2]
    assert np.array_equal(s1.weight, s2.weight)


def test_objective_gradient_matches_finite_differences(bench):
    _, recs, targets = bench
    scorer = pl.SelectionScorer.init(recs[0].source.dim, seed=0, scale=0.5)
    h = 1e-6
    for mode in ("base", "rf"):
        config = pl.RunConfig(mode=mode)
        for rec in recs[:2]:
            _, dW, _ = pl.pair_objective(scorer, rec, targets[rec.id], config)
            for idx in [(0, 0), (1, 3), (5, 2), (7, 7)]:
                old = scorer.weight[idx]
                scorer.weight[idx] = old + h
                up = pl.pair_objective(scorer, rec, targets[rec.id], config)[0]
                scorer.weight[idx] = old - h
                down = pl.pair_objective(scorer, rec, targets[rec.id], config)[0]
                scorer.weight[idx] = old
                assert dW[idx] == pytest.approx((up - down) / (2 * h), rel=1e-5, abs=1e-8)


def test_efficiency_shapes(bench):
    _, recs, _ = bench
    results = pl.run_efficiency_experiment(recs, budget=3, seed=0)
    assert list(results) == list(pl.MODES)
    assert all(len(r) == 3 for r in results.values())
    assert results["ds"][0].pairs_retained < results["base"][0].pairs_retained
    assert results["base"][0].pairs_retained == len(recs)
