import logging

import numpy as np

from core.exceptions import NonFiniteError
from .base import Batch, Model, ModelKind
from .logistic_regression import sigmoid
from .dataset import Dataset

logger = logging.getLogger(__name__)


def solve_optimum(model: Model, dataset: Dataset, max_iter: int = 100, tol: float = 1e-12) -> np.ndarray:
    """Full-batch training-split optimum for the convex model kinds"""
    train = dataset.train
    if model.kind is ModelKind.LEAST_SQUARES:
        params, *_ = np.linalg.lstsq(train.features, train.targets, rcond=None)
        return params
    if model.kind is not ModelKind.LOGISTIC_REGRESSION:
        raise ValueError(f"No closed-form or Newton solver for {model.kind.value}")

    params = np.zeros(model.dim)
    n = train.size
    loss, grad = model.loss_and_grad(params, train)
    iterations = 0
    while iterations < max_iter and np.linalg.norm(grad) >= tol:
        prob = sigmoid(train.features @ params)
        hessian = (train.features * (prob * (1 - prob))[:, None]).T @ train.features / n
        # separable data drives the Hessian towards singular
        direction, *_ = np.linalg.lstsq(hessian, grad, rcond=None)
        step = 1.0
        accepted = False
        while step >= 1e-8:
            candidate = params - step * direction
            try:
                new_loss, new_grad = model.loss_and_grad(candidate, train)
            except NonFiniteError:
                new_loss = np.inf
            if new_loss <= loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        params, loss, grad = candidate, new_loss, new_grad
        iterations += 1
    logger.debug(f"Newton solve finished after {iterations} iterations, |grad|={np.linalg.norm(grad):.3e}")
    return params


def gradient_check(model: Model, params: np.ndarray, batch: Batch, step: float = 1e-6) -> float:
    """Relative error between the analytic gradient and central differences"""
    _, analytic = model.loss_and_grad(params, batch)
    numeric = np.zeros_like(params)
    for k in range(params.shape[0]):
        bumped = params.copy()
        bumped[k] += step
        upper = model.loss(bumped, batch.features, batch.targets)
        bumped[k] -= 2 * step
        lower = model.loss(bumped, batch.features, batch.targets)
        numeric[k] = (upper - lower) / (2 * step)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)
