import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from core.exceptions import ComparisonError
from schemas.experiment import ExperimentConfig
from .config import load_config
from .metrics import RunMetrics
from .storage import CONFIG_FILE, METRICS_FILE, read_frame

logger = logging.getLogger(__name__)

FINAL_METRICS = ["train_loss", "val_loss", "batch_loss", "train_ppl", "val_ppl"]


def final_metrics(run: RunMetrics) -> Dict[str, float]:
    if not run.rows:
        raise ComparisonError("Run has no iterations to compare")
    last = run.rows[-1]
    return {
        "train_loss": float(last["train_loss"]),
        "val_loss": float(last["val_loss"]),
        "batch_loss": float(last["batch_loss"]),
        "train_ppl": float(np.exp(last["train_loss"])),
        "val_ppl": float(np.exp(last["val_loss"])),
    }


def relative_change(value: float, baseline: float) -> Optional[float]:
    """Signed change in percent; None when the baseline is zero"""
    if baseline == 0:
        return None
    return (value - baseline) / abs(baseline) * 100.0


def format_change(value: float, baseline: float) -> str:
    change = relative_change(value, baseline)
    if change is None:
        return f"{value:.6g} (n/a)"
    return f"{value:.6g} ({change:+.2f}%)"


@dataclass
class ComparisonReport:
    metrics: List[str] = field(default_factory=list)
    values: Dict[str, float] = field(default_factory=dict)
    baseline: Dict[str, float] = field(default_factory=dict)
    changes: Dict[str, Optional[float]] = field(default_factory=dict)

    def formatted(self, metric: str) -> str:
        return format_change(self.values[metric], self.baseline[metric])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "metric": self.metrics,
            "value": [self.values[m] for m in self.metrics],
            "baseline": [self.baseline[m] for m in self.metrics],
            "relative_change_pct": [self.changes[m] for m in self.metrics],
            "report": [self.formatted(m) for m in self.metrics],
        })

    def lines(self) -> List[str]:
        width = max(len(m) for m in self.metrics)
        return [f"{m:<{width}}  {self.formatted(m)}" for m in self.metrics]


def _check_compatible(run_config: ExperimentConfig, baseline_config: ExperimentConfig):
    mismatched = [
        name for name in ("model", "dataset", "iterations", "workers")
        if getattr(run_config, name) != getattr(baseline_config, name)
    ]
    if mismatched:
        raise ComparisonError(f"Run and baseline configs differ in: {', '.join(mismatched)}")


def compare_baseline(
    run: RunMetrics,
    baseline: RunMetrics,
    run_config: Optional[ExperimentConfig] = None,
    baseline_config: Optional[ExperimentConfig] = None,
) -> ComparisonReport:
    """Raw final value and signed relative change against the baseline, per metric"""
    if len(run.rows) != len(baseline.rows):
        raise ComparisonError(f"Run has {len(run.rows)} iterations, baseline has {len(baseline.rows)}")
    if run.num_shards != baseline.num_shards:
        raise ComparisonError(f"Run has {run.num_shards} shards, baseline has {baseline.num_shards}")
    if run_config is not None and baseline_config is not None:
        _check_compatible(run_config, baseline_config)

    values = final_metrics(run)
    reference = final_metrics(baseline)
    report = ComparisonReport(
        metrics=list(FINAL_METRICS),
        values=values,
        baseline=reference,
        changes={m: relative_change(values[m], reference[m]) for m in FINAL_METRICS},
    )
    logger.info(f"Compared run against baseline: train loss {report.formatted('train_loss')}")
    return report


def load_run(path: Union[str, Path]) -> Tuple[RunMetrics, Optional[ExperimentConfig]]:
    """metrics.csv (or a run directory) plus the sibling config.yaml when present"""
    path = Path(path)
    if path.is_dir():
        path = path / METRICS_FILE
    run = RunMetrics.from_frame(read_frame(path))
    config_path = path.with_name(CONFIG_FILE)
    config = load_config(config_path) if config_path.exists() else None
    return run, config
