from typing import Tuple

import numpy as np

from .base import Model, ModelKind


class LeastSquaresModel(Model):
    """L = 1/2 mean((x.w - y)^2)"""

    kind = ModelKind.LEAST_SQUARES

    @property
    def dim(self) -> int:
        return self.num_features

    def _loss_and_grad(self, params: np.ndarray, features: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
        residual = features @ params - targets
        n = features.shape[0]
        loss = 0.5 * float(residual @ residual) / n
        grad = features.T @ residual / n
        return loss, grad
