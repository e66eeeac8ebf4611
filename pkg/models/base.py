from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from core.exceptions import NonFiniteError


class ModelKind(Enum):
    LEAST_SQUARES = "least_squares"
    LOGISTIC_REGRESSION = "logistic_regression"
    MLP = "mlp"


@dataclass(frozen=True)
class Batch:
    features: np.ndarray
    targets: np.ndarray
    indices: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.features.shape[0]


class Model(ABC):
    """Differentiable objective L(theta; B) with an exact analytic gradient"""

    kind: ModelKind

    def __init__(self, num_features: int):
        if num_features < 1:
            raise ValueError(f"num_features must be at least 1, got {num_features}")
        self.num_features = num_features

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @abstractmethod
    def _loss_and_grad(self, params: np.ndarray, features: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
        pass

    def loss_and_grad(self, params: np.ndarray, batch: Batch) -> Tuple[float, np.ndarray]:
        self._check_params(params)
        loss, grad = self._loss_and_grad(params, batch.features, batch.targets)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"{self.kind.value} produced a non-finite loss or gradient")
        return float(loss), grad

    def loss(self, params: np.ndarray, features: np.ndarray, targets: np.ndarray) -> float:
        self._check_params(params)
        value, _ = self._loss_and_grad(params, features, targets)
        if not np.isfinite(value):
            raise NonFiniteError(f"{self.kind.value} produced a non-finite loss")
        return float(value)

    def init_params(self, seed: int) -> np.ndarray:
        return np.zeros(self.dim)

    def _check_params(self, params: np.ndarray):
        if params.shape != (self.dim,):
            raise ValueError(f"Expected {self.dim} parameters for {self.kind.value}, got shape {params.shape}")
