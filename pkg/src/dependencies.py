from pathlib import Path
from typing import Callable, Optional

import click

from settings import RunConfig, load_run_config, parse_overrides
from synth.repository import SampleRepository


def config_options(command: Callable) -> Callable:
    """Attach ``--config`` and repeatable ``--set key=value`` to a command."""
    command = click.option(
        "--set",
        "overrides",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override one configuration key.",
    )(command)
    return click.option(
        "--config",
        "config_path",
        type=click.Path(path_type=Path, dir_okay=False),
        default=None,
        help="key=value configuration file.",
    )(command)


def get_run_config(
    config_path: Optional[Path], overrides: tuple[str, ...], **defaults: object
) -> RunConfig:
    """Get the validated run configuration.

    Args:
        config_path: Optional configuration file.
        overrides: Raw ``--set`` pairs.
        defaults: Command-level defaults, weaker than the file.

    Returns:
        RunConfig: Run configuration.
    """
    return load_run_config(config_path, parse_overrides(overrides), defaults)


def get_sample_repository(root: Path) -> SampleRepository:
    return SampleRepository(root)
