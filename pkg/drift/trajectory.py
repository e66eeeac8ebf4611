from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd


class TrajectorySource(Enum):
    RECURRENCE = "recurrence"
    CLOSED_FORM = "closed_form"
    MONTE_CARLO = "monte_carlo"
    LIVE_TRAINING = "live_training"


@dataclass(frozen=True)
class DriftTrajectory:
    """Series of (t, E_t) pairs from one source"""
    source: TrajectorySource
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.t.shape != self.values.shape:
            raise ValueError(f"t and E_t lengths differ: {self.t.shape} vs {self.values.shape}")
        if np.any(self.values < 0):
            raise ValueError("E_t must be non-negative")

    def tail_mean(self, fraction: float = 0.5) -> float:
        start = int(len(self.values) * (1 - fraction))
        return float(np.mean(self.values[start:]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "source": self.source.value,
            "t": self.t.astype(np.int64),
            "E_t": self.values,
        })


def write_trajectories(path: Union[str, Path], trajectories: Sequence[DriftTrajectory]):
    frame = pd.concat([traj.to_frame() for traj in trajectories], ignore_index=True)
    frame.to_csv(path, index=False, lineterminator="\n")
