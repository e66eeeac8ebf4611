from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from .exceptions import MessageError, NonFiniteError

# Dense float64 vector of length d (full model or one shard of it).
ParamVector = np.ndarray


class Phase(Enum):
    GRADIENT = "gradient"
    PARAMETER = "parameter"


def ensure_finite(values, what: str, iteration: Optional[int] = None, worker: Optional[int] = None) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"Non-finite values in {what}", iteration=iteration, worker=worker)
    return array


def ordered_sum(arrays: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise sum in ascending index order.

    Every reduction goes through here so the floating-point result never
    depends on thread count or numpy's pairwise summation.
    """
    if not arrays:
        raise MessageError("Cannot sum an empty sequence of vectors")
    total = np.array(arrays[0], dtype=np.float64, copy=True)
    for array in arrays[1:]:
        if array.shape != total.shape:
            raise MessageError(f"Length mismatch in reduction: {array.shape} vs {total.shape}")
        total = total + array
    return total


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=np.float64, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class GradientPiece:
    """Gradient slice g_t^(i,j) computed by worker ``owner`` for shard ``shard_id``"""
    shard_id: int
    owner: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(ensure_finite(self.values, f"gradient piece ({self.owner}, {self.shard_id})", worker=self.owner)))


@dataclass(frozen=True)
class ParamShardMsg:
    """Broadcast payload carrying theta_{t+1}^(j) from its owner"""
    shard_id: int
    owner: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(ensure_finite(self.values, f"parameter shard {self.shard_id}", worker=self.owner)))


@dataclass(frozen=True)
class ReceptionMask:
    """Delivery indicators for one iteration and phase.

    ``entries`` has shape (num_workers, num_shards). For the gradient phase
    ``entries[i, j]`` is s_t^(i,j): did worker i's piece of shard j reach the
    owner of j. For the parameter phase ``entries[i, j]`` is r_t^(j,i): did the
    owner's broadcast of shard j reach worker i.
    """
    phase: Phase
    iteration: int
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=bool, copy=True)
        if entries.ndim != 2:
            raise MessageError(f"Reception mask must be 2-D, got shape {entries.shape}")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def num_workers(self) -> int:
        return self.entries.shape[0]

    @property
    def num_shards(self) -> int:
        return self.entries.shape[1]

    def row(self, shard: int) -> np.ndarray:
        return self.entries[:, shard]

    def is_delivered(self, sender: int, receiver: int, shard: int, owner: int) -> bool:
        if self.phase is Phase.GRADIENT:
            if receiver != owner:
                raise MessageError(f"Gradient pieces of shard {shard} only travel to worker {owner}")
            return bool(self.entries[sender, shard])
        if sender != owner:
            raise MessageError(f"Only worker {owner} broadcasts shard {shard}")
        return bool(self.entries[receiver, shard])

    def delivered_fraction(self) -> np.ndarray:
        return self.entries.mean(axis=0)


@dataclass
class DriftStats:
    """Per-shard drift samples and the running sigma^2 estimate"""
    samples: Dict[int, List[float]] = field(default_factory=dict)
    sigma2_hat: Dict[int, float] = field(default_factory=dict)
    window: int = 0
    iterations: List[int] = field(default_factory=list)

    def record(self, iteration: int, drift: Dict[int, float], sigma2: Dict[int, float]):
        for shard, value in drift.items():
            self.samples.setdefault(shard, []).append(float(value))
        for shard, value in sigma2.items():
            if value < 0:
                raise ValueError(f"sigma2 estimate must be non-negative, got {value}")
            self.sigma2_hat[shard] = float(value)
        self.iterations.append(iteration)
        self.window += 1

    @property
    def mean_sigma2(self) -> float:
        if not self.sigma2_hat:
            return 0.0
        return float(np.mean(list(self.sigma2_hat.values())))
