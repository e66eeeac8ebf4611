import logging
from typing import List, Sequence, Union

import numpy as np

from aggregate.policies import AggregateSignal
from core.exceptions import NonFiniteError, ShardLayoutError
from core.sharding import ShardLayout
from core.types import GradientPiece, ordered_sum
from models.base import Batch, Model

logger = logging.getLogger(__name__)


def compute_local_gradient(
    model: Model,
    full_view: np.ndarray,
    batches: Sequence[Batch],
    layout: ShardLayout,
    worker: int = 0,
    iteration: int = 0,
):
    """Mean micro-batch gradient at the worker's own view, split into shard pieces.

    Returns ``(pieces, loss)`` where loss is the mean micro-batch loss.
    """
    if model.dim != layout.total_dim:
        raise ShardLayoutError(f"Model has {model.dim} parameters, layout covers {layout.total_dim}")
    if not batches:
        raise ValueError("At least one micro-batch is required")

    losses = []
    grads = []
    for batch in batches:
        try:
            loss, grad = model.loss_and_grad(full_view, batch)
        except NonFiniteError as e:
            raise NonFiniteError(str(e), iteration=iteration, worker=worker) from e
        losses.append(loss)
        grads.append(grad)

    mean_grad = ordered_sum(grads) / len(grads)
    pieces = [
        GradientPiece(shard_id=j, owner=worker, values=values)
        for j, values in enumerate(layout.split(mean_grad))
    ]
    return pieces, float(sum(losses) / len(losses))


def optimizer_update(
    local_shard: np.ndarray,
    g_hat: Union[np.ndarray, AggregateSignal],
    lr: float,
) -> np.ndarray:
    """theta - lr * g_hat; a SKIP signal leaves the shard unchanged"""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if isinstance(g_hat, AggregateSignal):
        return np.array(local_shard, dtype=np.float64, copy=True)
    if np.shape(g_hat) != np.shape(local_shard):
        raise ShardLayoutError(f"Gradient of shape {np.shape(g_hat)} cannot update shard of shape {np.shape(local_shard)}")
    return local_shard - lr * g_hat
