from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from aggregate.policies import AggregationPolicy, GradientCache
from core.sharding import ShardLayout
from core.types import ReceptionMask
from drift.estimators import CaseTableReport


class CoordinatorStatus(Enum):
    INITIALIZED = "initialized"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


class ExecutionMode(Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


@dataclass
class WorkerState:
    """One worker's shards, its possibly stale view of the full model, and its caches"""
    worker_id: int
    local_shards: Dict[int, np.ndarray]
    full_view: np.ndarray
    prev_view: np.ndarray
    view_stamps: np.ndarray
    grad_cache: Dict[int, GradientCache] = field(default_factory=dict)
    agg_cache: Dict[int, np.ndarray] = field(default_factory=dict)

    @classmethod
    def initial(cls, worker_id: int, params: np.ndarray, layout: ShardLayout) -> "WorkerState":
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (layout.total_dim,):
            raise ValueError(f"Initial parameters have shape {params.shape}, layout needs ({layout.total_dim},)")
        return cls(
            worker_id=worker_id,
            local_shards={j: params[layout.slice(j)].copy() for j in layout.owned_by(worker_id)},
            full_view=params.copy(),
            prev_view=params.copy(),
            view_stamps=np.zeros(layout.num_shards, dtype=np.int64),
        )


@dataclass(frozen=True)
class IterationConfig:
    micro_batches: int = 1
    learning_rate: Union[float, Callable[[int], float]] = 0.1
    policy: AggregationPolicy = AggregationPolicy()
    batch_size: int = 32
    seed: int = 0
    instrument: bool = False

    def __post_init__(self):
        if self.micro_batches < 1:
            raise ValueError(f"micro_batches must be at least 1, got {self.micro_batches}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if not callable(self.learning_rate) and self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")

    def lr_at(self, t: int) -> float:
        rate = self.learning_rate(t) if callable(self.learning_rate) else self.learning_rate
        if rate <= 0:
            raise ValueError(f"learning rate at iteration {t} is {rate}, must be positive")
        return float(rate)


@dataclass
class IterationMetrics:
    iteration: int
    batch_loss: float
    grad_received: np.ndarray
    param_received: np.ndarray
    drift: np.ndarray
    updates: Dict[int, np.ndarray]
    skipped_shards: List[int]
    grad_mask: ReceptionMask
    param_mask: ReceptionMask
    case_table: Optional[CaseTableReport] = None
