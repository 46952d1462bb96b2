from pathlib import Path
from typing import Optional

import click

from dependencies import config_options, get_run_config
from pipeline.pipeline import load_stage_generators, read_pipeline_inputs, run_pipeline, write_pipeline_outputs


@click.command("pipeline")
@click.option("--ckpt1", type=click.Path(path_type=Path, dir_okay=False), required=True)
@click.option("--ckpt2", type=click.Path(path_type=Path, dir_okay=False), required=True)
@click.option("--ckpt3", type=click.Path(path_type=Path, dir_okay=False), required=True)
@click.option(
    "--inputs",
    "input_dir",
    type=click.Path(path_type=Path, file_okay=False),
    required=True,
    help="Directory with skeleton.png, garment.png, body.png, head.png and optionally silhouette.png.",
)
@config_options
def pipeline_command(
    ckpt1: Path,
    ckpt2: Path,
    ckpt3: Path,
    input_dir: Path,
    config_path: Optional[Path],
    overrides: tuple[str, ...],
):
    """Run the four stages and write stage1.png ... final.png to out_dir."""
    config = get_run_config(config_path, overrides, stage=4)
    generators = load_stage_generators([ckpt1, ckpt2, ckpt3])
    result = run_pipeline(generators, read_pipeline_inputs(input_dir), config.tau_diff)
    for path in write_pipeline_outputs(result, config.out_dir):
        click.echo(path)
