import time

import numpy as np
import pandas as pd
import pytest

from core.sharding import shard_partition
from core.types import Phase, ReceptionMask
from drift import (
    DriftCase,
    DriftTrajectory,
    Sigma2Tracker,
    TrajectorySource,
    check_case_table,
    classify_transition,
    closed_form_trajectory,
    drift_closed_form,
    drift_recurrence_step,
    drift_steady_state,
    estimate_sigma2,
    gaussian_updates,
    mc_drift_process,
    pairwise_drift,
    rademacher_updates,
    recurrence_trajectory,
    replica_transition,
    sample_pairs,
    verify_drift,
    write_trajectories,
)


def test_recurrence_examples():
    assert drift_recurrence_step(0.0, 0.5, 1.0) == 0.5
    assert drift_recurrence_step(1.0, 0.5, 1.0) == 0.75
    assert drift_recurrence_step(3.7, 0.0, 2.0) == 0.0


def test_closed_form_examples():
    assert drift_closed_form(1, 0.0, 0.5, 1.0) == pytest.approx(drift_recurrence_step(0.0, 0.5, 1.0))
    assert drift_closed_form(0, 2.5, 0.4, 1.0) == 2.5
    assert drift_closed_form(10_000, 7.0, 0.3, 2.0) == pytest.approx(2 * 0.3 / 1.3 * 2, rel=1e-12)


def test_steady_state_examples():
    assert drift_steady_state(0.1, 1.0) == pytest.approx(0.18181818181818)
    assert drift_steady_state(0.0, 5.0) == 0.0
    assert drift_steady_state(0.5, 2.0) == pytest.approx(4 / 3)


@pytest.mark.parametrize("args", [(-1.0, 0.5, 1.0), (0.0, 1.0, 1.0), (0.0, 0.5, -1.0)])
def test_recurrence_rejects_invalid_inputs(args):
    with pytest.raises(ValueError):
        drift_recurrence_step(*args)


def test_closed_form_undefined_at_total_loss():
    with pytest.raises(ValueError):
        drift_closed_form(3, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        drift_steady_state(1.0, 1.0)


@pytest.mark.parametrize("p", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_recurrence_matches_closed_form(p):
    for e0, sigma2 in [(0.0, 1.0), (5.0, 0.3), (0.2, 12.0)]:
        rec = recurrence_trajectory(10_000, e0, p, sigma2)
        closed = closed_form_trajectory(10_000, e0, p, sigma2)
        np.testing.assert_allclose(rec.values, closed.values, rtol=1e-10, atol=1e-300)


def test_deviation_contracts_by_p_squared():
    p, sigma2, e0 = 0.6, 1.5, 4.0
    limit = drift_steady_state(p, sigma2)
    deviations = np.abs(closed_form_trajectory(10, e0, p, sigma2).values - limit)
    np.testing.assert_allclose(deviations[1:] / deviations[:-1], p * p, rtol=1e-9)


def test_replica_transition_cases():
    d = np.array([1.0, 1.0, 1.0, 1.0])
    delta = np.array([0.5, 0.5, 0.5, 0.5])
    r_i = np.array([True, True, False, False])
    r_k = np.array([True, False, True, False])
    np.testing.assert_array_equal(replica_transition(d, r_i, r_k, delta), [0.0, 0.5, -0.5, 1.0])
    assert classify_transition(True, False) is DriftCase.ONLY_FIRST
    assert classify_transition(False, False) is DriftCase.NEITHER


def test_lossless_process_has_no_drift():
    trajectory = mc_drift_process(0.0, gaussian_updates(1.0), 50, 1000, seed=1)
    assert np.all(trajectory.values == 0.0)
    assert trajectory.source is TrajectorySource.MONTE_CARLO


@pytest.mark.parametrize("sigma2", [1.0, 4.0])
@pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
def test_monte_carlo_matches_steady_state(p, sigma2):
    start = time.perf_counter()
    result = verify_drift(p, sigma2, trials=100_000, iterations=500, seed=3)
    elapsed = time.perf_counter() - start
    assert result.predicted == pytest.approx(2 * p / (1 + p) * sigma2)
    assert result.relative_error < 0.05
    assert result.passed, f"tail mean {result.tail_mean} vs {result.predicted}"
    assert elapsed < 30.0


def test_monte_carlo_rademacher_updates():
    result = verify_drift(0.5, 2.0, trials=50_000, iterations=100, seed=4, distribution="rademacher")
    assert result.relative_error < 0.05


def test_monte_carlo_is_reproducible():
    a = mc_drift_process(0.4, rademacher_updates(1.0), 20, 25_000, seed=8)
    b = mc_drift_process(0.4, rademacher_updates(1.0), 20, 25_000, seed=8)
    np.testing.assert_array_equal(a.values, b.values)


def test_monte_carlo_rejects_bad_sizes():
    with pytest.raises(ValueError):
        mc_drift_process(0.2, gaussian_updates(1.0), 0, 10, seed=0)
    with pytest.raises(ValueError):
        verify_drift(0.2, 1.0, 10, 10, distribution="uniform")


def test_sigma2_estimates():
    assert estimate_sigma2([np.full(4, 0.3)] * 5, window=3) == pytest.approx(0.09)
    assert estimate_sigma2([np.zeros(3)], window=10) == 0.0
    rng = np.random.default_rng(0)
    history = [rng.normal(0.0, np.sqrt(2.0), 8) for _ in range(10_000)]
    assert estimate_sigma2(history, window=10_000) == pytest.approx(2.0, rel=0.03)
    with pytest.raises(ValueError):
        estimate_sigma2([], window=5)
    with pytest.raises(ValueError):
        estimate_sigma2([np.zeros(2)], window=0)


def test_sigma2_tracker_window():
    tracker = Sigma2Tracker(num_shards=2, window=2)
    tracker.update({0: np.array([1.0]), 1: np.array([0.0])})
    tracker.update({0: np.array([2.0]), 1: np.array([0.0])})
    current = tracker.update({0: np.array([3.0]), 1: np.array([0.0])})
    assert current[0] == pytest.approx((4.0 + 9.0) / 2)
    assert current[1] == 0.0


def test_pairwise_drift_examples():
    np.testing.assert_array_equal(pairwise_drift([np.ones(3)] * 4), np.zeros(6))
    np.testing.assert_allclose(pairwise_drift([np.zeros(5), np.full(5, 0.5)]), [0.25])
    views = [np.array([float(v)]) for v in range(4)]
    np.testing.assert_array_equal(pairwise_drift(views), [1, 4, 9, 1, 4, 1])
    with pytest.raises(ValueError):
        pairwise_drift([np.zeros(2)])


def test_pairwise_drift_per_shard():
    layout = shard_partition(4, 2)
    views = [np.array([0.0, 0.0, 1.0, 1.0]), np.array([0.0, 0.0, 3.0, 3.0])]
    assert pairwise_drift(views, 0, layout)[0] == 0.0
    assert pairwise_drift(views, 1, layout)[0] == 4.0


def test_pair_sampling():
    assert len(sample_pairs(8, seed=0)) == 28
    sampled = sample_pairs(16, seed=0)
    assert len(sampled) == 32 and len(set(sampled)) == 32
    assert sampled == sample_pairs(16, seed=0)
    assert all(i < k for i, k in sampled)


def test_case_table_on_stale_replicas():
    layout = shard_partition(3, 3)
    prev_views = [np.array([1.0, 5.0, 7.0]), np.array([0.0, 2.0, 9.0]), np.array([1.0, 3.0, 9.0])]
    prev_owner = [np.array([1.0]), np.array([2.0]), np.array([9.0])]
    new_owner = [np.array([1.5]), np.array([2.5]), np.array([8.0])]
    entries = np.array([
        [True, False, True],
        [False, True, False],
        [True, True, True],
    ])
    mask = ReceptionMask(phase=Phase.PARAMETER, iteration=4, entries=entries)
    new_views = [view.copy() for view in prev_views]
    for i in range(3):
        for j in range(3):
            if entries[i, j]:
                new_views[i][layout.slice(j)] = new_owner[j]
    pairs = sample_pairs(3, seed=0)
    report = check_case_table(prev_views, new_views, prev_owner, new_owner, mask, layout, pairs)
    assert report.checks == 9
    assert report.violations == 0
    assert report.literal_checks > 0
    assert report.literal_matches == report.literal_checks

    corrupted = [view.copy() for view in new_views]
    corrupted[0][1] += 1.0
    bad = check_case_table(prev_views, corrupted, prev_owner, new_owner, mask, layout, pairs)
    assert bad.violations > 0


def test_trajectory_csv(tmp_path):
    path = tmp_path / "drift.csv"
    write_trajectories(path, [recurrence_trajectory(3, 0.0, 0.5, 1.0), closed_form_trajectory(3, 0.0, 0.5, 1.0)])
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["source", "t", "E_t"]
    assert set(frame["source"]) == {"recurrence", "closed_form"}
    assert len(frame) == 8
    with open(path, "rb") as handle:
        assert b"\r\n" not in handle.read()


def test_trajectory_rejects_negative_values():
    with pytest.raises(ValueError):
        DriftTrajectory(TrajectorySource.LIVE_TRAINING, np.arange(2), np.array([0.0, -1.0]))
