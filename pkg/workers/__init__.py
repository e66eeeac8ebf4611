from .state import (
    CoordinatorStatus,
    ExecutionMode,
    IterationConfig,
    IterationMetrics,
    WorkerState,
)
from .worker import compute_local_gradient, optimizer_update
from .coordinator import TrainingCoordinator, iteration_step
from .reference import run_reference_sgd

__all__ = [
    'CoordinatorStatus',
    'ExecutionMode',
    'IterationConfig',
    'IterationMetrics',
    'WorkerState',
    'compute_local_gradient',
    'optimizer_update',
    'TrainingCoordinator',
    'iteration_step',
    'run_reference_sgd',
]
