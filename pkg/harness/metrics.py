from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from core.exceptions import NonFiniteError
from core.types import DriftStats


@dataclass
class RunMetrics:
    """Per-iteration rows plus the final summary of one run"""
    num_shards: int
    rows: List[Dict[str, float]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    output_dir: Optional[Path] = None
    drift_stats: DriftStats = field(default_factory=DriftStats)

    def columns(self) -> List[str]:
        columns = ["iter", "train_loss", "val_loss", "batch_loss"]
        for prefix in ("grad_recv_frac", "param_recv_frac", "drift", "sigma2_hat"):
            columns.extend(f"{prefix}_{j}" for j in range(self.num_shards))
        return columns

    def append(self, row: Dict[str, float]):
        values = [value for key, value in row.items() if key != "iter"]
        if not np.all(np.isfinite(values)):
            raise NonFiniteError(f"Non-finite metrics row: {row}", iteration=int(row["iter"]))
        self.rows.append(row)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows, columns=self.columns())
        frame["iter"] = frame["iter"].astype(np.int64)
        return frame

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([self.summary])

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=np.float64)

    def mean_drift(self) -> np.ndarray:
        """Per-iteration drift averaged over shards"""
        return np.mean([self.column(f"drift_{j}") for j in range(self.num_shards)], axis=0)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, summary: Optional[Dict[str, Any]] = None) -> "RunMetrics":
        num_shards = sum(1 for column in frame.columns if column.startswith("drift_"))
        metrics = cls(num_shards=num_shards, summary=dict(summary or {}))
        metrics.rows = frame.to_dict(orient="records")
        return metrics
