import logging
from pathlib import Path
from typing import Optional

import click

from dependencies import config_options, get_run_config, get_sample_repository
from settings import RunConfig
from synth.samples import iter_samples, sample_seeds

logger = logging.getLogger(__name__)


def generate_dataset(config: RunConfig) -> Path:
    """Write the train and test splits of one stage under ``out_dir``.

    Returns:
        Path: The dataset directory.
    """
    repository = get_sample_repository(config.out_dir)
    repository.reset()
    splits = sample_seeds(config.seed, config.n_train, config.n_test)
    for split, seeds in splits.items():
        for sample in iter_samples(config.stage, seeds, config.image_size):
            repository.add(sample, split)
        logger.info(f"Wrote {len(seeds)} stage-{config.stage} {split} samples to {config.out_dir / split}")
    return config.out_dir


@click.command("gen-data")
@config_options
def gen_data(config_path: Optional[Path], overrides: tuple[str, ...]):
    """Generate a synthetic dataset for one stage."""
    config = get_run_config(config_path, overrides)
    click.echo(generate_dataset(config))
