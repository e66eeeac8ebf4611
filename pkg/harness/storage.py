from pathlib import Path
from typing import Union

import pandas as pd

from core.exceptions import ComparisonError

METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.csv"
DRIFT_FILE = "drift.csv"
CONFIG_FILE = "config.yaml"
SWEEP_SUMMARY_FILE = "sweep_summary.csv"


def write_frame(frame: pd.DataFrame, path: Union[str, Path]):
    """UTF-8, LF line endings, header row, no index"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")


def read_frame(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise ComparisonError(f"CSV file not found: {path}")
    return pd.read_csv(path, encoding="utf-8")

