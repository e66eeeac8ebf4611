from .experiment import (
    AggregationSpec,
    DatasetSpec,
    DropSpec,
    ExperimentConfig,
    LearningRateSpec,
    ModelSpec,
)

__all__ = [
    'AggregationSpec',
    'DatasetSpec',
    'DropSpec',
    'ExperimentConfig',
    'LearningRateSpec',
    'ModelSpec',
]
