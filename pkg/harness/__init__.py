from .config import apply_overrides, cli_overrides, dump_config, load_config, validate_config
from .metrics import RunMetrics
from .runner import ExperimentRunner, assemble_owner_model, build_run, run_experiment
from .sweep import summarize_sweep, sweep, sweep_entries
from .report import ComparisonReport, compare_baseline, format_change, load_run, relative_change

__all__ = [
    'apply_overrides',
    'cli_overrides',
    'dump_config',
    'load_config',
    'validate_config',
    'RunMetrics',
    'ExperimentRunner',
    'assemble_owner_model',
    'build_run',
    'run_experiment',
    'summarize_sweep',
    'sweep',
    'sweep_entries',
    'ComparisonReport',
    'compare_baseline',
    'format_change',
    'load_run',
    'relative_change',
]
