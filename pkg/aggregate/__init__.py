from .policies import (
    AggregationPolicy,
    AggregationVariant,
    ZeroSurvivorFallback,
    AggregateSignal,
    SKIP,
    GradientCache,
    aggregate_omit_renormalize,
    aggregate_stale_substitute,
    aggregate_shard,
    zero_survivor_fallback,
)

__all__ = [
    'AggregationPolicy',
    'AggregationVariant',
    'ZeroSurvivorFallback',
    'AggregateSignal',
    'SKIP',
    'GradientCache',
    'aggregate_omit_renormalize',
    'aggregate_stale_substitute',
    'aggregate_shard',
    'zero_survivor_fallback',
]
