import numpy as np
import pytest

from aggregate import AggregationPolicy, SKIP, ZeroSurvivorFallback
from core.exceptions import IterationError, NonFiniteError, ShardLayoutError
from core.sharding import shard_partition
from drift import drift_steady_state
from models import Batch, create_model, make_synthetic_dataset, solve_optimum
from netsim.channel import DropConfig
from workers import (
    ExecutionMode,
    IterationConfig,
    TrainingCoordinator,
    WorkerState,
    compute_local_gradient,
    iteration_step,
    optimizer_update,
    run_reference_sgd,
)


def test_local_gradient_single_sample():
    model = create_model("least_squares", 1)
    layout = shard_partition(1, 1)
    batch = Batch(np.array([[1.0]]), np.array([1.0]))
    pieces, loss = compute_local_gradient(model, np.zeros(1), [batch], layout)
    assert loss == 0.5
    np.testing.assert_array_equal(pieces[0].values, [-1.0])


def test_repeated_micro_batches_match_single(ls_model, ls_dataset):
    layout = shard_partition(ls_model.dim, 4)
    view = np.linspace(-1, 1, ls_model.dim)
    batch = Batch(ls_dataset.features[:16], ls_dataset.targets[:16])
    once, loss_once = compute_local_gradient(ls_model, view, [batch], layout)
    twice, loss_twice = compute_local_gradient(ls_model, view, [batch, batch], layout)
    assert loss_once == loss_twice
    for a, b in zip(once, twice):
        np.testing.assert_array_equal(a.values, b.values)


def test_local_gradient_layout_mismatch(ls_model, ls_dataset):
    with pytest.raises(ShardLayoutError):
        compute_local_gradient(ls_model, np.zeros(ls_model.dim), [ls_dataset.train], shard_partition(5, 2))


def test_local_gradient_non_finite_carries_context(ls_model, ls_dataset):
    layout = shard_partition(ls_model.dim, 2)
    with pytest.raises(NonFiniteError, match="iteration=7, worker=3"):
        compute_local_gradient(ls_model, np.full(ls_model.dim, np.inf), [ls_dataset.train], layout, worker=3, iteration=7)


def test_optimizer_update_examples():
    np.testing.assert_allclose(optimizer_update(np.array([1.0]), np.array([2.0]), 0.1), [0.8])
    np.testing.assert_array_equal(optimizer_update(np.array([3.0]), np.array([0.0]), 0.1), [3.0])
    np.testing.assert_allclose(optimizer_update(np.array([1.0, -1.0]), np.array([10.0, -10.0]), 0.05), [0.5, -0.5])
    np.testing.assert_array_equal(optimizer_update(np.array([1.0, 2.0]), SKIP, 0.1), [1.0, 2.0])
    with pytest.raises(ShardLayoutError):
        optimizer_update(np.zeros(2), np.zeros(3), 0.1)
    with pytest.raises(ValueError):
        optimizer_update(np.zeros(2), np.zeros(2), 0.0)


def test_iteration_config_validation():
    with pytest.raises(ValueError):
        IterationConfig(micro_batches=0)
    with pytest.raises(ValueError):
        IterationConfig(learning_rate=-0.1)
    with pytest.raises(ValueError):
        IterationConfig(learning_rate=lambda t: 0.0).lr_at(3)
    assert IterationConfig(learning_rate=lambda t: 1.0 / (t + 1)).lr_at(3) == 0.25


def make_run(kind="least_squares", workers=4, features=8, p_grad=0.0, p_param=0.0, **cfg):
    model = create_model(kind, features, hidden=4)
    dataset = make_synthetic_dataset(seed=2, kind=kind, n=800, f=features, noise=0.1, hidden=4)
    layout = shard_partition(model.dim, workers)
    drop_cfg = DropConfig(p_grad=p_grad, p_param=p_param, seed=13)
    cfg.setdefault("batch_size", 8)
    iteration_cfg = IterationConfig(seed=3, **cfg)
    return model, dataset, layout, drop_cfg, iteration_cfg


def run_steps(coordinator, steps, params=None):
    states = coordinator.initial_states(params if params is not None else coordinator.model.init_params(0))
    history = []
    for t in range(steps):
        states, metrics = coordinator.iteration_step(states, t)
        history.append((states, metrics))
    return states, history


def test_lossless_step_keeps_views_identical():
    model, dataset, layout, drop_cfg, cfg = make_run()
    states = [WorkerState.initial(i, np.zeros(model.dim), layout) for i in range(4)]
    states, metrics = iteration_step(states, model, dataset, cfg, 0, layout, drop_cfg)
    for state in states[1:]:
        assert np.array_equal(state.full_view, states[0].full_view)
    np.testing.assert_array_equal(metrics.drift, np.zeros(4))
    np.testing.assert_array_equal(metrics.grad_received, np.ones(4))


def test_worker_owning_several_shards_keeps_each_in_its_view():
    model, dataset, _, drop_cfg, cfg = make_run()
    layout = shard_partition(model.dim, 6, num_workers=4)
    params = np.arange(model.dim, dtype=np.float64)
    state = WorkerState.initial(0, params, layout)
    assert sorted(state.local_shards) == [0, 4]
    np.testing.assert_array_equal(state.local_shards[4], params[layout.slice(4)])

    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states, _ = run_steps(coordinator, 3, params)
    for state in states:
        assert sorted(state.local_shards) == layout.owned_by(state.worker_id)
        for j, shard in state.local_shards.items():
            np.testing.assert_array_equal(state.full_view[layout.slice(j)], shard)


def test_total_param_loss_freezes_non_owner_views():
    model, dataset, layout, drop_cfg, cfg = make_run(p_param=1.0)
    initial = np.arange(model.dim, dtype=np.float64) / 10
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states, _ = run_steps(coordinator, 1, initial)
    for state in states:
        for j in range(layout.num_shards):
            span = layout.slice(j)
            if layout.owner(j) == state.worker_id:
                np.testing.assert_array_equal(state.full_view[span], state.local_shards[j])
                assert not np.array_equal(state.full_view[span], initial[span])
            else:
                np.testing.assert_array_equal(state.full_view[span], initial[span])


@pytest.mark.parametrize("kind,workers", [("least_squares", 8), ("logistic_regression", 4), ("mlp", 4)])
def test_lossless_run_matches_single_process_reference(kind, workers):
    model, dataset, layout, drop_cfg, cfg = make_run(kind, workers=workers, micro_batches=2, learning_rate=0.05)
    params = model.init_params(5)
    reference = run_reference_sgd(model, dataset, params, cfg, 100, workers)
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states = coordinator.initial_states(params)
        for t in range(100):
            states, _ = coordinator.iteration_step(states, t)
            for state in states:
                assert np.array_equal(state.full_view, reference[t + 1])


def test_lossless_views_stay_identical_long_run():
    model, dataset, layout, drop_cfg, cfg = make_run(workers=8, learning_rate=0.05)
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states = coordinator.initial_states(np.zeros(model.dim))
        for t in range(500):
            states, _ = coordinator.iteration_step(states, t)
            assert all(np.array_equal(s.full_view, states[0].full_view) for s in states)


def test_parallel_and_sequential_runs_are_bit_identical():
    model, dataset, layout, drop_cfg, cfg = make_run(p_grad=0.3, p_param=0.3)
    results = []
    for mode in (ExecutionMode.SEQUENTIAL, ExecutionMode.PARALLEL):
        with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg, mode) as coordinator:
            states, _ = run_steps(coordinator, 30)
        results.append(np.concatenate([s.full_view for s in states]))
    assert np.array_equal(results[0], results[1])


def test_owner_views_are_never_stale():
    model, dataset, layout, drop_cfg, cfg = make_run(p_grad=0.5, p_param=0.5)
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        _, history = run_steps(coordinator, 40)
    for states, _ in history:
        for state in states:
            for j in layout.owned_by(state.worker_id):
                np.testing.assert_array_equal(state.full_view[layout.slice(j)], state.local_shards[j])


def test_views_hold_past_broadcasts_with_geometric_lag():
    p = 0.4
    model, dataset, layout, drop_cfg, cfg = make_run(p_param=p, learning_rate=0.02)
    broadcasts = []
    lags = []
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states = coordinator.initial_states(np.zeros(model.dim))
        broadcasts.append([states[layout.owner(j)].local_shards[j] for j in range(layout.num_shards)])
        for t in range(1500):
            states, _ = coordinator.iteration_step(states, t)
            broadcasts.append([states[layout.owner(j)].local_shards[j] for j in range(layout.num_shards)])
            for state in states:
                for j in range(layout.num_shards):
                    stamp = int(state.view_stamps[j])
                    np.testing.assert_array_equal(state.full_view[layout.slice(j)], broadcasts[stamp][j])
                    if layout.owner(j) != state.worker_id and t >= 100:
                        lags.append(t + 1 - stamp)
    lags = np.array(lags)
    # P(lag = k) = (1 - p) p^k
    assert lags.mean() == pytest.approx(p / (1 - p), rel=0.08)
    assert np.mean(lags == 0) == pytest.approx(1 - p, abs=0.025)


def test_case_table_holds_every_iteration():
    model, dataset, layout, drop_cfg, cfg = make_run(p_grad=0.3, p_param=0.5, instrument=True)
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        _, history = run_steps(coordinator, 60)
    reports = [metrics.case_table for _, metrics in history]
    assert all(report.violations == 0 for report in reports)
    assert sum(report.checks for report in reports) == 60 * 6 * 4
    literal_checks = sum(report.literal_checks for report in reports)
    assert literal_checks > 0
    assert sum(report.literal_matches for report in reports) == literal_checks


def test_zero_survivor_skip_leaves_shard_unchanged():
    policy = AggregationPolicy(zero_survivor_fallback=ZeroSurvivorFallback.SKIP)
    model, dataset, layout, _, cfg = make_run(policy=policy)
    drop_cfg = DropConfig(p_grad=1.0, p_param=0.0, seed=1, self_delivery=False)
    initial = np.ones(model.dim)
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states, history = run_steps(coordinator, 3, initial)
    assert history[0][1].skipped_shards == [0, 1, 2, 3]
    for state in states:
        np.testing.assert_array_equal(state.full_view, initial)


def test_zero_survivor_reuse_prev_replays_last_aggregate():
    model, dataset, layout, _, cfg = make_run(learning_rate=0.1)
    with TrainingCoordinator(model, dataset, layout, DropConfig(seed=1), cfg) as coordinator:
        states, history = run_steps(coordinator, 1)
        first_update = history[0][1].updates
        coordinator.drop_cfg = DropConfig(p_grad=1.0, seed=1, self_delivery=False)
        _, metrics = coordinator.iteration_step(states, 1)
    for j in range(layout.num_shards):
        np.testing.assert_allclose(metrics.updates[j], first_update[j], rtol=1e-12, atol=1e-14)


def test_stale_substitute_policy_runs():
    policy = AggregationPolicy.from_names("stale_substitute")
    model, dataset, layout, drop_cfg, cfg = make_run(p_grad=0.3, p_param=0.3, policy=policy)
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states, history = run_steps(coordinator, 20)
    assert all(len(states[layout.owner(j)].grad_cache[j]) == 4 for j in range(4))
    assert history[-1][1].batch_loss < history[0][1].batch_loss


def test_errors_carry_iteration_context():
    model, dataset, layout, drop_cfg, cfg = make_run(learning_rate=1e300)
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states = coordinator.initial_states(np.ones(model.dim))
        with pytest.raises(IterationError) as info:
            for t in range(5):
                states, _ = coordinator.iteration_step(states, t)
    assert info.value.iteration >= 1
    assert info.value.phase == "gradient_compute"


def test_live_drift_within_loose_band():
    p = 0.2
    model, dataset, layout, drop_cfg, cfg = make_run(p_grad=p, p_param=p, batch_size=4, learning_rate=0.05)
    start = solve_optimum(model, dataset)
    drift, sigma2 = [], []
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg) as coordinator:
        states = coordinator.initial_states(start)
        for t in range(600):
            states, metrics = coordinator.iteration_step(states, t)
            if t >= 100:
                drift.append(np.mean(metrics.drift))
                sigma2.append(np.mean([float(u @ u) / u.shape[0] for u in metrics.updates.values()]))
    ratio = np.mean(drift) / drift_steady_state(p, np.mean(sigma2))
    assert 0.5 <= ratio <= 2.0
