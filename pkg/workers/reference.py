import logging
from typing import List

import numpy as np

from core.types import ordered_sum
from models.base import Model
from models.dataset import Dataset, sample_batch
from .state import IterationConfig

logger = logging.getLogger(__name__)


def run_reference_sgd(
    model: Model,
    dataset: Dataset,
    params: np.ndarray,
    cfg: IterationConfig,
    iterations: int,
    num_workers: int,
) -> List[np.ndarray]:
    """Single-process SGD over the union of every worker's batches.

    Gradients are reduced in the same order as the lossless distributed run, so
    the returned trajectory (theta_0 .. theta_T) matches it bit for bit.
    """
    if iterations < 0:
        raise ValueError(f"iterations must be non-negative, got {iterations}")
    theta = np.array(params, dtype=np.float64, copy=True)
    trajectory = [theta.copy()]
    for t in range(iterations):
        worker_grads = []
        for i in range(num_workers):
            grads = []
            for m in range(cfg.micro_batches):
                batch = sample_batch(dataset, i, t, m, cfg.batch_size, cfg.seed, num_workers, cfg.micro_batches)
                _, grad = model.loss_and_grad(theta, batch)
                grads.append(grad)
            worker_grads.append(ordered_sum(grads) / len(grads))
        theta = theta - cfg.lr_at(t) * (ordered_sum(worker_grads) / num_workers)
        trajectory.append(theta.copy())
    logger.debug(f"Reference SGD finished {iterations} iterations")
    return trajectory
