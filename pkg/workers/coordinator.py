import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from aggregate.policies import SKIP, aggregate_shard
from collectives.lossy import GradientExchangeResult, all_gather_lossy, reduce_scatter_lossy
from core.exceptions import IterationError, LossySyncError
from core.sharding import ShardLayout
from drift.estimators import check_case_table, pairwise_drift, sample_pairs
from models.base import Model
from models.dataset import Dataset, sample_batch
from netsim.channel import DropConfig
from .state import CoordinatorStatus, ExecutionMode, IterationConfig, IterationMetrics, WorkerState
from .worker import compute_local_gradient, optimizer_update


class TrainingCoordinator:
    """Drives all N workers through gradient compute, lossy reduce-scatter,
    aggregation, the owner update and the lossy all-gather.

    The two collectives are barriers. Per-worker gradient work can run on a
    thread pool; results are always consumed in worker order.
    """

    def __init__(
        self,
        model: Model,
        dataset: Dataset,
        layout: ShardLayout,
        drop_cfg: DropConfig,
        cfg: IterationConfig,
        execution: ExecutionMode = ExecutionMode.SEQUENTIAL,
        max_threads: Optional[int] = None,
    ):
        self.model = model
        self.dataset = dataset
        self.layout = layout
        self.drop_cfg = drop_cfg
        self.cfg = cfg
        self.execution = ExecutionMode(execution)
        self.max_threads = max_threads or layout.num_workers
        self.pairs = sample_pairs(layout.num_workers, cfg.seed)
        self.status = CoordinatorStatus.INITIALIZED
        self.current_phase = ""
        self._pool: Optional[ThreadPoolExecutor] = None
        self.logger = logging.getLogger(__name__)

    def __enter__(self) -> "TrainingCoordinator":
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def initial_states(self, params: np.ndarray) -> List[WorkerState]:
        return [WorkerState.initial(i, params, self.layout) for i in range(self.layout.num_workers)]

    def iteration_step(self, states: Sequence[WorkerState], t: int) -> Tuple[List[WorkerState], IterationMetrics]:
        self.status = CoordinatorStatus.PROCESSING
        try:
            self.current_phase = "gradient_compute"
            pieces, losses = self._run_gradient_compute(states, t)

            self.current_phase = "gradient_sync"
            exchange = reduce_scatter_lossy(pieces, self.layout, self.drop_cfg, t)

            self.current_phase = "aggregation"
            g_hats, caches, skipped = self._run_aggregation(states, exchange, t)

            self.current_phase = "optimizer_update"
            new_shards = self._run_optimizer_update(states, g_hats, t)

            self.current_phase = "parameter_sync"
            new_states, metrics = self._run_parameter_sync(states, new_shards, caches, exchange, losses, skipped, t)
        except (LossySyncError, ValueError) as e:
            self.status = CoordinatorStatus.FAILED
            raise IterationError(str(e), iteration=t, phase=self.current_phase) from e

        self.status = CoordinatorStatus.COMPLETED
        return new_states, metrics

    def _worker_gradient(self, state: WorkerState, t: int):
        batches = [
            sample_batch(
                self.dataset,
                worker=state.worker_id,
                t=t,
                micro=m,
                batch_size=self.cfg.batch_size,
                seed=self.cfg.seed,
                num_workers=self.layout.num_workers,
                micro_batches=self.cfg.micro_batches,
            )
            for m in range(self.cfg.micro_batches)
        ]
        return compute_local_gradient(self.model, state.full_view, batches, self.layout, state.worker_id, t)

    def _run_gradient_compute(self, states: Sequence[WorkerState], t: int):
        if self.execution is ExecutionMode.PARALLEL:
            if self._pool is None:
                self._pool = ThreadPoolExecutor(max_workers=self.max_threads)
            results = list(self._pool.map(lambda state: self._worker_gradient(state, t), states))
        else:
            results = [self._worker_gradient(state, t) for state in states]
        pieces = [grid_row for grid_row, _ in results]
        losses = [loss for _, loss in results]
        return pieces, losses

    def _run_aggregation(self, states: Sequence[WorkerState], exchange: GradientExchangeResult, t: int):
        g_hats = {}
        caches: Dict[int, dict] = {}
        skipped: List[int] = []
        for j in range(self.layout.num_shards):
            owner = states[self.layout.owner(j)]
            g_hat, cache = aggregate_shard(
                self.cfg.policy,
                exchange.received[j],
                exchange.mask.row(j),
                owner.grad_cache.get(j),
                owner.agg_cache.get(j),
                self.layout.size(j),
            )
            if g_hat is SKIP:
                skipped.append(j)
                self.logger.warning(f"Iteration {t}: no gradient for shard {j}, update skipped")
            caches[j] = {"grad": cache, "agg": None if g_hat is SKIP else g_hat}
            g_hats[j] = g_hat
        return g_hats, caches, skipped

    def _run_optimizer_update(self, states: Sequence[WorkerState], g_hats: Dict, t: int) -> Dict[int, np.ndarray]:
        lr = self.cfg.lr_at(t)
        return {
            j: optimizer_update(states[self.layout.owner(j)].local_shards[j], g_hat, lr)
            for j, g_hat in g_hats.items()
        }

    def _run_parameter_sync(self, states, new_shards, caches, exchange, losses, skipped, t):
        layout = self.layout
        owner_new = [new_shards[j] for j in range(layout.num_shards)]
        owner_prev = [states[layout.owner(j)].local_shards[j] for j in range(layout.num_shards)]
        prev_views = [state.full_view for state in states]

        new_views, update = all_gather_lossy(owner_new, prev_views, layout, self.drop_cfg, t)

        new_states = []
        for state, view in zip(states, new_views):
            i = state.worker_id
            grad_cache = dict(state.grad_cache)
            agg_cache = dict(state.agg_cache)
            for j in layout.owned_by(i):
                if caches[j]["grad"] is not None:
                    grad_cache[j] = caches[j]["grad"]
                if caches[j]["agg"] is not None:
                    agg_cache[j] = caches[j]["agg"]
            new_states.append(replace(
                state,
                local_shards={j: owner_new[j] for j in layout.owned_by(i)},
                full_view=view,
                prev_view=state.full_view,
                view_stamps=np.where(update.mask.entries[i], t + 1, state.view_stamps),
                grad_cache=grad_cache,
                agg_cache=agg_cache,
            ))

        drift = np.array([
            float(np.mean(pairwise_drift(new_views, j, layout, self.pairs))) if self.pairs else 0.0
            for j in range(layout.num_shards)
        ])
        case_table = None
        if self.cfg.instrument and self.pairs:
            case_table = check_case_table(prev_views, new_views, owner_prev, owner_new, update.mask, layout, self.pairs)

        metrics = IterationMetrics(
            iteration=t,
            batch_loss=float(sum(losses) / len(losses)),
            grad_received=exchange.mask.delivered_fraction(),
            param_received=update.mask.delivered_fraction(),
            drift=drift,
            updates={j: owner_new[j] - owner_prev[j] for j in range(layout.num_shards)},
            skipped_shards=skipped,
            grad_mask=exchange.mask,
            param_mask=update.mask,
            case_table=case_table,
        )
        return new_states, metrics


def iteration_step(
    states: Sequence[WorkerState],
    model: Model,
    dataset: Dataset,
    cfg: IterationConfig,
    t: int,
    layout: ShardLayout,
    drop_cfg: DropConfig,
    execution: ExecutionMode = ExecutionMode.SEQUENTIAL,
) -> Tuple[List[WorkerState], IterationMetrics]:
    """One full training iteration for every worker"""
    with TrainingCoordinator(model, dataset, layout, drop_cfg, cfg, execution) as coordinator:
        return coordinator.iteration_step(states, t)
