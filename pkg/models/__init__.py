from .base import Model, ModelKind, Batch
from .least_squares import LeastSquaresModel
from .logistic_regression import LogisticRegressionModel, sigmoid
from .mlp import MLPModel
from .dataset import Dataset, make_synthetic_dataset, sample_batch
from .optimum import solve_optimum, gradient_check


def create_model(kind, num_features: int, hidden: int = 8) -> Model:
    """Build a model of the given kind for ``num_features`` input features"""
    kind = ModelKind(kind)
    if kind is ModelKind.LEAST_SQUARES:
        return LeastSquaresModel(num_features)
    if kind is ModelKind.LOGISTIC_REGRESSION:
        return LogisticRegressionModel(num_features)
    return MLPModel(num_features, hidden)


__all__ = [
    'Model',
    'ModelKind',
    'Batch',
    'LeastSquaresModel',
    'LogisticRegressionModel',
    'MLPModel',
    'sigmoid',
    'Dataset',
    'make_synthetic_dataset',
    'sample_batch',
    'solve_optimum',
    'gradient_check',
    'create_model',
]
