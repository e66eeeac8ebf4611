from .exceptions import (
    LossySyncError,
    ShardLayoutError,
    ConfigError,
    MessageError,
    ComparisonError,
    NonFiniteError,
    IterationError,
)
from .sharding import ShardLayout, shard_partition
from .types import (
    ParamVector,
    Phase,
    GradientPiece,
    ParamShardMsg,
    ReceptionMask,
    DriftStats,
    ensure_finite,
    ordered_sum,
)

__all__ = [
    'LossySyncError',
    'ShardLayoutError',
    'ConfigError',
    'MessageError',
    'ComparisonError',
    'NonFiniteError',
    'IterationError',
    'ShardLayout',
    'shard_partition',
    'ParamVector',
    'Phase',
    'GradientPiece',
    'ParamShardMsg',
    'ReceptionMask',
    'DriftStats',
    'ensure_finite',
    'ordered_sum',
]
