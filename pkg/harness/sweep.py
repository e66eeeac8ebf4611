import logging
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd

from schemas.experiment import ExperimentConfig
from .runner import ExperimentRunner
from .storage import SWEEP_SUMMARY_FILE, write_frame

logger = logging.getLogger(__name__)

SWEEP_METRICS = [
    "final_train_loss",
    "final_val_loss",
    "final_train_ppl",
    "final_val_ppl",
    "steady_drift",
    "predicted_drift",
]


def sweep_entries(config: ExperimentConfig, p_list: Sequence[float], seeds: int, output_dir: Optional[Union[str, Path]] = None) -> List[Dict[str, Any]]:
    """One config per (p, seed); p drives both drop phases, seeds count up from config.seed"""
    if not p_list:
        raise ValueError("Sweep needs at least one drop rate")
    if seeds < 1:
        raise ValueError(f"Sweep needs at least one seed, got {seeds}")
    entries = []
    for p in p_list:
        for k in range(seeds):
            seed = config.seed + k
            entry = config.model_copy(update={
                "seed": seed,
                "drop": config.drop.model_copy(update={"p_grad": p, "p_param": p, "p_list": None}),
            })
            run_dir = None if output_dir is None else str(Path(output_dir) / f"p{p:g}_seed{seed}")
            entries.append({"config": entry.model_dump(mode="json"), "output_dir": run_dir})
    return entries


def task_launcher(entry: Dict[str, Any]) -> Dict[str, Any]:
    config = ExperimentConfig.model_validate(entry["config"])
    result = ExperimentRunner(progress=False).run(config, entry["output_dir"])
    return result.summary


def summarize_sweep(summaries: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """mean and population std of each final metric per p, sorted by p"""
    frame = pd.DataFrame(list(summaries))
    frame["p"] = frame["p_param"]
    grouped = frame.groupby("p", sort=True)
    table = pd.DataFrame({"runs": grouped.size()})
    for metric in SWEEP_METRICS:
        table[f"{metric}_mean"] = grouped[metric].mean()
        table[f"{metric}_std"] = grouped[metric].std(ddof=0)
    return table.reset_index()


def sweep(
    config: ExperimentConfig,
    p_list: Optional[Sequence[float]] = None,
    seeds: int = 1,
    jobs: Optional[int] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> pd.DataFrame:
    p_list = list(p_list if p_list is not None else (config.drop.p_list or []))
    jobs = jobs or config.jobs
    entries = sweep_entries(config, p_list, seeds, output_dir)
    logger.info(f"Sweeping p={p_list} over {seeds} seeds ({len(entries)} runs, {jobs} jobs)")

    if jobs > 1:
        with Pool(jobs) as pool:
            summaries = pool.map(task_launcher, entries)
    else:
        summaries = [task_launcher(entry) for entry in entries]

    table = summarize_sweep(summaries)
    if output_dir is not None:
        write_frame(table, Path(output_dir) / SWEEP_SUMMARY_FILE)
    return table
