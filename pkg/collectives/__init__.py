from .lossy import (
    GradientExchangeResult,
    ParamViewUpdate,
    NewValue,
    KEEP_STALE,
    ViewAction,
    reduce_scatter_lossy,
    all_gather_lossy,
    lossy_all_reduce,
    replay_views,
)
from .reference import all_reduce_reference, reduce_broadcast_reference

__all__ = [
    'GradientExchangeResult',
    'ParamViewUpdate',
    'NewValue',
    'KEEP_STALE',
    'ViewAction',
    'reduce_scatter_lossy',
    'all_gather_lossy',
    'lossy_all_reduce',
    'replay_views',
    'all_reduce_reference',
    'reduce_broadcast_reference',
]
