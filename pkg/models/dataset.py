import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from .base import Batch, ModelKind
from .logistic_regression import sigmoid
from .mlp import MLPModel

logger = logging.getLogger(__name__)

TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class Dataset:
    kind: ModelKind
    features: np.ndarray
    targets: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    planted: Optional[np.ndarray] = None
    noise: float = 0.0

    def __post_init__(self):
        n = self.features.shape[0]
        if self.targets.shape != (n,):
            raise ValueError(f"targets shape {self.targets.shape} does not match {n} samples")
        if np.intersect1d(self.train_idx, self.val_idx).size:
            raise ValueError("train and validation splits overlap")

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def train(self) -> Batch:
        return Batch(self.features[self.train_idx], self.targets[self.train_idx], self.train_idx)

    @property
    def validation(self) -> Batch:
        return Batch(self.features[self.val_idx], self.targets[self.val_idx], self.val_idx)

    def to_csv(self, path: Union[str, Path]):
        frame = pd.DataFrame(self.features, columns=[f"x{k}" for k in range(self.num_features)])
        frame["y"] = self.targets
        split = np.empty(self.features.shape[0], dtype=object)
        split[self.train_idx] = "train"
        split[self.val_idx] = "val"
        frame["split"] = split
        frame.to_csv(path, index=False, lineterminator="\n")

    @classmethod
    def from_csv(cls, path: Union[str, Path], kind: ModelKind) -> "Dataset":
        frame = pd.read_csv(path)
        feature_cols = [c for c in frame.columns if c.startswith("x")]
        split = frame["split"].to_numpy()
        return cls(
            kind=kind,
            features=frame[feature_cols].to_numpy(dtype=np.float64),
            targets=frame["y"].to_numpy(dtype=np.float64),
            train_idx=np.flatnonzero(split == "train"),
            val_idx=np.flatnonzero(split == "val"),
        )


def make_synthetic_dataset(
    seed: int,
    kind: Union[ModelKind, str],
    n: int,
    f: int,
    noise: float,
    hidden: int = 8,
) -> Dataset:
    """Planted-parameter data: deterministic in ``seed``, 80/20 train/validation split"""
    kind = ModelKind(kind)
    if n < 2 or f < 1:
        raise ValueError(f"Need at least 2 samples and 1 feature (n={n}, f={f})")
    if noise < 0:
        raise ValueError(f"noise must be non-negative, got {noise}")

    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, f))

    if kind is ModelKind.LEAST_SQUARES:
        planted = rng.standard_normal(f)
        targets = features @ planted + noise * rng.standard_normal(n)
    elif kind is ModelKind.LOGISTIC_REGRESSION:
        planted = rng.standard_normal(f)
        logits = features @ planted
        if noise > 0:
            targets = (rng.random(n) < sigmoid(logits / noise)).astype(np.float64)
        else:
            targets = (logits > 0).astype(np.float64)
    else:
        model = MLPModel(f, hidden)
        planted = model.init_params(seed) * 2.0
        targets = model.forward(planted, features) + noise * rng.standard_normal(n)

    order = rng.permutation(n)
    n_train = min(n - 1, max(1, int(round(TRAIN_FRACTION * n))))
    train_idx = np.sort(order[:n_train])
    val_idx = np.sort(order[n_train:])

    return Dataset(
        kind=kind,
        features=features,
        targets=targets,
        train_idx=train_idx,
        val_idx=val_idx,
        planted=planted,
        noise=noise,
    )


@lru_cache(maxsize=16)
def _epoch_permutation(seed: int, epoch: int, n_train: int) -> np.ndarray:
    perm = np.random.default_rng([seed, epoch]).permutation(n_train)
    perm.flags.writeable = False
    return perm


def sample_batch(
    dataset: Dataset,
    worker: int,
    t: int,
    micro: int,
    batch_size: int,
    seed: int,
    num_workers: int,
    micro_batches: int = 1,
) -> Batch:
    """Deterministic partitioned shuffle.

    Each epoch is one permutation of the training split; iteration t hands
    consecutive, non-overlapping blocks of it to (worker, micro) slots, so all
    batches of one iteration are disjoint. An epoch lasts n_train // per_step
    iterations; the last n_train % per_step entries of its permutation are not
    drawn, and since every epoch reshuffles, no index is skipped systematically.
    """
    n_train = dataset.train_idx.shape[0]
    per_step = num_workers * micro_batches * batch_size
    if batch_size < 1 or per_step > n_train:
        raise ValueError(
            f"{num_workers} workers x {micro_batches} micro-batches x {batch_size} samples "
            f"exceeds the {n_train} training samples"
        )
    if not (0 <= worker < num_workers and 0 <= micro < micro_batches):
        raise ValueError(f"worker {worker} / micro-batch {micro} out of range")

    steps_per_epoch = n_train // per_step
    epoch, step = divmod(t, steps_per_epoch)
    perm = _epoch_permutation(seed, epoch, n_train)
    offset = step * per_step + (worker * micro_batches + micro) * batch_size
    indices = dataset.train_idx[perm[offset: offset + batch_size]]
    return Batch(dataset.features[indices], dataset.targets[indices], indices)
