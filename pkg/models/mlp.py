from typing import Tuple

import numpy as np

from .base import Model, ModelKind


class MLPModel(Model):
    """One tanh hidden layer, scalar linear output, 1/2 mean squared error.

    Flat parameter layout: W1 (hidden x features, row-major), b1, w2, b2.
    """

    kind = ModelKind.MLP

    def __init__(self, num_features: int, hidden: int = 8):
        super().__init__(num_features)
        if hidden < 1:
            raise ValueError(f"hidden width must be at least 1, got {hidden}")
        self.hidden = hidden

    @property
    def dim(self) -> int:
        return self.hidden * self.num_features + 2 * self.hidden + 1

    def unpack(self, params: np.ndarray):
        h, f = self.hidden, self.num_features
        w1 = params[: h * f].reshape(h, f)
        b1 = params[h * f: h * f + h]
        w2 = params[h * f + h: h * f + 2 * h]
        b2 = params[-1]
        return w1, b1, w2, b2

    def forward(self, params: np.ndarray, features: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self.unpack(params)
        return np.tanh(features @ w1.T + b1) @ w2 + b2

    def init_params(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng([seed, self.dim])
        params = np.zeros(self.dim)
        h, f = self.hidden, self.num_features
        params[: h * f] = rng.standard_normal(h * f) / np.sqrt(f)
        params[h * f + h: h * f + 2 * h] = rng.standard_normal(h) / np.sqrt(h)
        return params

    def _loss_and_grad(self, params: np.ndarray, features: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
        w1, b1, w2, b2 = self.unpack(params)
        n = features.shape[0]
        hidden = np.tanh(features @ w1.T + b1)
        residual = hidden @ w2 + b2 - targets
        loss = 0.5 * float(residual @ residual) / n

        d_out = residual / n
        d_hidden = np.outer(d_out, w2) * (1.0 - hidden ** 2)
        grad = np.concatenate([
            (d_hidden.T @ features).ravel(),
            d_hidden.sum(axis=0),
            hidden.T @ d_out,
            [d_out.sum()],
        ])
        return loss, grad
