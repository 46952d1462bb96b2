import logging
from pathlib import Path
from typing import Optional

import click

from dependencies import config_options, get_run_config, get_sample_repository
from settings import RunConfig
from synth.exceptions import MissingDatasetError
from training.schemas import StageTask, TrainConfig
from training.trainer import stage_specs, train

logger = logging.getLogger(__name__)


def run_training(config: RunConfig) -> Path:
    """Train the generator of ``config.stage`` on ``data_dir``'s training split.

    Returns:
        Path: The final checkpoint.

    Raises:
        MissingDatasetError: If the dataset holds no samples for the stage.
    """
    task = StageTask.for_stage(config.stage)
    dataset = get_sample_repository(config.data_dir).find(split="train", stage=config.stage)
    if not dataset:
        raise MissingDatasetError(f"no stage-{config.stage} training samples in {config.data_dir}")
    generator_spec, discriminator_spec = stage_specs(task, config)
    logger.info(
        f"Training stage {config.stage}: {len(dataset)} samples x {config.epochs} epochs, "
        f"image size {config.image_size}"
    )
    return train(
        task,
        dataset,
        TrainConfig.from_run_config(config),
        config.out_dir,
        generator_spec,
        discriminator_spec,
        config_echo=config.model_dump(mode="json"),
        resume=config.resume,
    )


@click.command("train")
@config_options
def train_command(config_path: Optional[Path], overrides: tuple[str, ...]):
    """Train one stage generator and its discriminator."""
    config = get_run_config(config_path, overrides)
    click.echo(run_training(config))
