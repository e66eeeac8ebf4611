from typing import Tuple

import numpy as np

from .base import Model, ModelKind


def sigmoid(z: np.ndarray) -> np.ndarray:
    return np.exp(-np.logaddexp(0.0, -z))


class LogisticRegressionModel(Model):
    """Mean binary cross-entropy on {0, 1} labels, no intercept"""

    kind = ModelKind.LOGISTIC_REGRESSION

    @property
    def dim(self) -> int:
        return self.num_features

    def _loss_and_grad(self, params: np.ndarray, features: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
        z = features @ params
        n = features.shape[0]
        loss = float(np.mean(np.logaddexp(0.0, z) - targets * z))
        grad = features.T @ (sigmoid(z) - targets) / n
        return loss, grad
