from pathlib import Path
from typing import Optional

import click

from dependencies import config_options, get_run_config
from metrics.evaluate import evaluate_dir, write_ssim_csv

REPORT_FILE = "ssim.csv"


@click.command("eval")
@click.argument("generated_dir", type=click.Path(path_type=Path, file_okay=False))
@click.argument("target_dir", type=click.Path(path_type=Path, file_okay=False))
@config_options
def eval_command(
    generated_dir: Path, target_dir: Path, config_path: Optional[Path], overrides: tuple[str, ...]
):
    """Score identically named PNG pairs with SSIM and write ssim.csv to out_dir."""
    config = get_run_config(config_path, overrides, stage=4)
    report = evaluate_dir(generated_dir, target_dir)
    path = write_ssim_csv(report, config.out_dir / REPORT_FILE)
    click.echo(f"{report.count} pairs, mean SSIM {report.mean:.6f}: {path}")
