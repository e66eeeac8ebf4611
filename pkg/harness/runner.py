import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from tqdm import tqdm

from aggregate.policies import AggregationPolicy
from core.exceptions import ConfigError, IterationError, LossySyncError, NonFiniteError, ShardLayoutError
from core.sharding import ShardLayout, shard_partition
from core.types import DriftStats
from drift.analytic import closed_form_trajectory, drift_steady_state
from drift.estimators import CaseTableReport, Sigma2Tracker
from drift.trajectory import DriftTrajectory, TrajectorySource, write_trajectories
from models import Model, create_model
from models.dataset import Dataset, make_synthetic_dataset
from netsim.channel import DropConfig
from schemas.experiment import ExperimentConfig
from workers.coordinator import TrainingCoordinator
from workers.state import ExecutionMode, IterationConfig, WorkerState
from .config import dump_config
from .metrics import RunMetrics
from .storage import CONFIG_FILE, DRIFT_FILE, METRICS_FILE, SUMMARY_FILE, write_frame

LIVE_BAND = (0.5, 2.0)


@dataclass
class RunSetup:
    model: Model
    dataset: Dataset
    layout: ShardLayout
    drop_cfg: DropConfig
    iteration_cfg: IterationConfig
    params: np.ndarray


def build_run(config: ExperimentConfig) -> RunSetup:
    model = create_model(config.model.kind, config.dataset.features, config.model.hidden)
    try:
        layout = shard_partition(model.dim, config.num_shards, config.workers)
    except ShardLayoutError as e:
        raise ConfigError(f"Invalid sharding: {e}", fields=["shards", "workers"]) from e
    dataset = make_synthetic_dataset(
        config.dataset_seed,
        config.model.kind,
        config.dataset.samples,
        config.dataset.features,
        config.dataset.noise,
        config.model.hidden,
    )
    iteration_cfg = IterationConfig(
        micro_batches=config.micro_batches,
        learning_rate=config.learning_rate.at,
        policy=AggregationPolicy.from_names(config.aggregation.policy, config.aggregation.fallback),
        batch_size=config.batch_size,
        seed=config.seed,
        instrument=config.instrument,
    )
    return RunSetup(
        model=model,
        dataset=dataset,
        layout=layout,
        drop_cfg=DropConfig(p_grad=config.drop.p_grad, p_param=config.drop.p_param, seed=config.seed),
        iteration_cfg=iteration_cfg,
        params=model.init_params(config.seed),
    )


def assemble_owner_model(states: List[WorkerState], layout: ShardLayout) -> np.ndarray:
    """Full parameter vector with every shard taken from its owner"""
    return layout.join([states[layout.owner(j)].local_shards[j] for j in range(layout.num_shards)])


def mean_staleness(states: List[WorkerState], layout: ShardLayout, t: int) -> float:
    """Mean lag, in iterations, of the non-owner shard views after step t"""
    lags = [
        (t + 1) - state.view_stamps[j]
        for state in states
        for j in range(layout.num_shards)
        if layout.owner(j) != state.worker_id
    ]
    return float(np.mean(lags)) if lags else 0.0


class ExperimentRunner:

    def __init__(self, progress: bool = True):
        self.progress = progress
        self.logger = logging.getLogger(__name__)

    def run(self, config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None) -> RunMetrics:
        run_label = f"N={config.workers} p_grad={config.drop.p_grad} p_param={config.drop.p_param} seed={config.seed}"
        start = time.perf_counter()
        self.logger.info(f"Starting run {run_label}")
        try:
            result = self._execute(config)
            if output_dir is not None:
                self._write_outputs(result, config, Path(output_dir))
        except LossySyncError as e:
            self.logger.error(f"Run {run_label} failed after {time.perf_counter() - start:.1f}s: {e}")
            raise

        duration = time.perf_counter() - start
        self.logger.info(
            f"Run {run_label} finished in {duration:.1f}s: train loss {result.summary['final_train_loss']:.6g}, "
            f"drift ratio {result.summary['drift_ratio']:.3g}"
        )
        return result

    def _execute(self, config: ExperimentConfig) -> RunMetrics:
        setup = build_run(config)
        layout = setup.layout
        train, validation = setup.dataset.train, setup.dataset.validation
        tracker = Sigma2Tracker(layout.num_shards, config.sigma2_window)
        result = RunMetrics(num_shards=layout.num_shards)
        staleness = []
        case_table = CaseTableReport()
        drift_stats = DriftStats()

        with TrainingCoordinator(
            setup.model,
            setup.dataset,
            layout,
            setup.drop_cfg,
            setup.iteration_cfg,
            ExecutionMode(config.execution),
        ) as coordinator:
            states = coordinator.initial_states(setup.params)
            iterations = tqdm(
                range(config.iterations),
                desc=f"p_grad={config.drop.p_grad} p_param={config.drop.p_param}",
                disable=not self.progress,
                leave=False,
            )
            for t in iterations:
                states, metrics = coordinator.iteration_step(states, t)
                sigma2 = tracker.update(metrics.updates)
                theta = assemble_owner_model(states, layout)

                try:
                    row = {
                        "iter": t,
                        "train_loss": setup.model.loss(theta, train.features, train.targets),
                        "val_loss": setup.model.loss(theta, validation.features, validation.targets),
                        "batch_loss": metrics.batch_loss,
                    }
                except NonFiniteError as e:
                    raise IterationError(str(e), iteration=t, phase="evaluation") from e
                for j in range(layout.num_shards):
                    row[f"grad_recv_frac_{j}"] = float(metrics.grad_received[j])
                    row[f"param_recv_frac_{j}"] = float(metrics.param_received[j])
                    row[f"drift_{j}"] = float(metrics.drift[j])
                    row[f"sigma2_hat_{j}"] = sigma2[j]
                drift_stats.record(t, {j: row[f"drift_{j}"] for j in range(layout.num_shards)}, sigma2)
                result.append(row)
                staleness.append(mean_staleness(states, layout, t))
                if metrics.case_table is not None:
                    case_table = case_table + metrics.case_table

        result.drift_stats = drift_stats
        result.summary = self._summarize(config, result, staleness, case_table)
        return result

    def _summarize(self, config: ExperimentConfig, result: RunMetrics, staleness: List[float], case_table: CaseTableReport) -> Dict[str, Any]:
        tail = max(1, len(result.rows) // 2)
        final = result.rows[-1]
        p = config.drop.p_param
        steady = float(np.mean(result.mean_drift()[-tail:]))
        sigma2_hat = float(np.mean([
            np.mean(result.column(f"sigma2_hat_{j}")[-tail:]) for j in range(result.num_shards)
        ]))
        predicted = drift_steady_state(p, sigma2_hat) if p < 1.0 else float("nan")
        ratio = steady / predicted if predicted > 0 else float("nan")
        if p > 0 and np.isfinite(ratio) and not LIVE_BAND[0] <= ratio <= LIVE_BAND[1]:
            self.logger.warning(f"Live drift {steady:.4g} is {ratio:.2f}x the predicted {predicted:.4g}")

        summary = {
            "iterations": config.iterations,
            "workers": config.workers,
            "shards": result.num_shards,
            "p_grad": config.drop.p_grad,
            "p_param": p,
            "seed": config.seed,
            "policy": config.aggregation.policy,
            "final_train_loss": final["train_loss"],
            "final_val_loss": final["val_loss"],
            "final_train_ppl": float(np.exp(final["train_loss"])),
            "final_val_ppl": float(np.exp(final["val_loss"])),
            "steady_drift": steady,
            "sigma2_hat": sigma2_hat,
            "final_sigma2_hat": result.drift_stats.mean_sigma2,
            "predicted_drift": predicted,
            "drift_ratio": ratio,
            "mean_staleness": float(np.mean(staleness[-tail:])),
            "predicted_staleness": p / (1.0 - p) if p < 1.0 else float("nan"),
        }
        if config.instrument:
            summary.update({
                "case_checks": case_table.checks,
                "case_violations": case_table.violations,
                "literal_checks": case_table.literal_checks,
                "literal_matches": case_table.literal_matches,
            })
        return summary

    def _write_outputs(self, result: RunMetrics, config: ExperimentConfig, output_dir: Path):
        output_dir.mkdir(parents=True, exist_ok=True)
        write_frame(result.to_frame(), output_dir / METRICS_FILE)
        write_frame(result.summary_frame(), output_dir / SUMMARY_FILE)

        iterations = len(result.rows)
        live = DriftTrajectory(
            TrajectorySource.LIVE_TRAINING,
            np.arange(iterations + 1),
            np.concatenate([[0.0], result.mean_drift()]),
        )
        trajectories = [live]
        if config.drop.p_param < 1.0:
            trajectories.append(closed_form_trajectory(iterations, 0.0, config.drop.p_param, result.summary["sigma2_hat"]))
        write_trajectories(output_dir / DRIFT_FILE, trajectories)
        dump_config(config, output_dir / CONFIG_FILE)
        result.output_dir = output_dir
        self.logger.info(f"Wrote run outputs to {output_dir}")


def run_experiment(
    config: ExperimentConfig,
    output_dir: Optional[Union[str, Path]] = None,
    progress: bool = False,
) -> RunMetrics:
    return ExperimentRunner(progress=progress).run(config, output_dir)
