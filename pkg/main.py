import logging
import sys
from pathlib import Path
from typing import Optional

import click
from dotenv import load_dotenv

from core.exceptions import LossySyncError
from drift.trajectory import write_trajectories
from drift.montecarlo import UPDATE_SAMPLERS, verify_drift
from harness.config import cli_overrides, load_config
from harness.report import compare_baseline, load_run
from harness.runner import ExperimentRunner
from harness.storage import write_frame
from harness.sweep import sweep as run_sweep
from schemas.experiment import ExperimentConfig
from settings import get_settings

load_dotenv()

logging.basicConfig(
    level=get_settings().log_level.upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)

logger = logging.getLogger(__name__)


def resolve_output(config: ExperimentConfig, out: Optional[str], command: str) -> Path:
    if out:
        return Path(out)
    if config.output_dir:
        return Path(config.output_dir)
    return Path(get_settings().output_root) / command


def parse_p_list(value: Optional[str]):
    if value is None:
        return None
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated floats, got '{value}'") from e


@click.group()
def cli():
    """Lossy-transport data-parallel SGD simulator"""


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="YAML experiment manifest")
@click.option("--p-grad", type=float, default=None)
@click.option("--p-param", type=float, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--iters", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--policy", type=click.Choice(["omit_renormalize", "stale_substitute"]), default=None)
@click.option("--fallback", type=click.Choice(["reuse_prev", "zero", "skip"]), default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def run(config_path, p_grad, p_param, workers, iters, seed, policy, fallback, out):
    """Run one experiment and write metrics.csv, summary.csv, drift.csv"""
    try:
        config = load_config(config_path, cli_overrides(
            p_grad=p_grad, p_param=p_param, workers=workers, iters=iters,
            seed=seed, policy=policy, fallback=fallback,
        ))
        output_dir = resolve_output(config, out, "run")
        result = ExperimentRunner(progress=get_settings().progress).run(config, output_dir)
    except (LossySyncError, ValueError) as e:
        logger.error(f"Run failed: {e}")
        raise click.ClickException(str(e))

    summary = result.summary
    click.echo(f"final train loss {summary['final_train_loss']:.6g}, val loss {summary['final_val_loss']:.6g}")
    click.echo(
        f"steady drift {summary['steady_drift']:.6g} vs predicted {summary['predicted_drift']:.6g} "
        f"(ratio {summary['drift_ratio']:.3g})"
    )
    click.echo(f"outputs in {output_dir}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--p-list", default=None, help="Comma-separated drop rates, e.g. 0,0.1,0.2")
@click.option("--seeds", type=int, default=1, show_default=True)
@click.option("--jobs", type=int, default=None)
@click.option("--iters", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def sweep(config_path, p_list, seeds, jobs, iters, workers, out):
    """One run per (p, seed), summarized as mean and std per p"""
    try:
        config = load_config(config_path, cli_overrides(iters=iters, workers=workers))
        p_values = parse_p_list(p_list) or config.drop.p_list
        if not p_values:
            raise click.BadParameter("no drop rates given; pass --p-list or set drop.p_list", param_hint="--p-list")
        output_dir = resolve_output(config, out, "sweep")
        table = run_sweep(config, p_values, seeds, jobs or get_settings().jobs, output_dir)
    except (LossySyncError, ValueError) as e:
        logger.error(f"Sweep failed: {e}")
        raise click.ClickException(str(e))

    click.echo(table.to_string(index=False))


@cli.command("verify-drift")
@click.option("--p", "p", type=float, required=True)
@click.option("--sigma2", type=float, default=1.0, show_default=True)
@click.option("--trials", type=int, default=100_000, show_default=True)
@click.option("--iters", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tolerance", type=float, default=0.05, show_default=True)
@click.option("--distribution", type=click.Choice(sorted(UPDATE_SAMPLERS)), default="gaussian", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the MC trajectory as CSV")
def verify_drift_command(p, sigma2, trials, iters, seed, tolerance, distribution, out):
    """Monte Carlo replica process vs 2p/(1+p) sigma^2"""
    try:
        result = verify_drift(p, sigma2, trials, iters, seed, tolerance, distribution)
    except ValueError as e:
        raise click.ClickException(str(e))
    if out:
        write_trajectories(out, [result.trajectory])
    status = "PASS" if result.passed else "FAIL"
    click.echo(
        f"{status}: tail mean {result.tail_mean:.6f}, predicted {result.predicted:.6f}, "
        f"relative error {result.relative_error:.2%} (tolerance {tolerance:.0%})"
    )
    if not result.passed:
        sys.exit(1)


@cli.command()
@click.option("--run", "run_path", type=click.Path(exists=True), required=True, help="metrics.csv or run directory")
@click.option("--baseline", "baseline_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the report as CSV")
def compare(run_path, baseline_path, out):
    """Final metrics with signed relative change against a baseline run"""
    try:
        run_metrics, run_config = load_run(run_path)
        baseline_metrics, baseline_config = load_run(baseline_path)
        report = compare_baseline(run_metrics, baseline_metrics, run_config, baseline_config)
    except LossySyncError as e:
        logger.error(f"Comparison failed: {e}")
        raise click.ClickException(str(e))
    if out:
        write_frame(report.to_frame(), out)
    for line in report.lines():
        click.echo(line)


if __name__ == "__main__":
    cli()
