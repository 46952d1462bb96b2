import logging

import click
from pydantic import ValidationError

from exceptions import NumericAbortError, PolyGanError, StorageError, ValidationFailedError
from metrics.commands import eval_command
from pipeline.commands import pipeline_command
from settings import settings
from synth.commands import gen_data
from training.commands import train_command
from utils import SelfCheckStatus, run_self_check

logger = logging.getLogger(__name__)


class PolyGanGroup(click.Group):
    """Command group that turns failures into the documented exit codes."""

    def make_context(self, info_name, args, parent=None, **extra) -> click.Context:
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as error:
            error.show()
            raise click.exceptions.Exit(ValidationFailedError.exit_code) from error

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except click.UsageError as error:
            error.show()
            ctx.exit(ValidationFailedError.exit_code)
        except PolyGanError as error:
            click.echo(str(error), err=True)
            ctx.exit(error.exit_code)
        except ValidationError as error:
            click.echo(f"{ValidationFailedError.prefix}. {error}", err=True)
            ctx.exit(ValidationFailedError.exit_code)
        except OSError as error:
            click.echo(f"{StorageError.prefix}. {error}", err=True)
            ctx.exit(StorageError.exit_code)


@click.group(cls=PolyGanGroup)
def cli():
    """Poly-GAN: procedural data, per-stage training, four-stage inference and SSIM evaluation."""
    logging.basicConfig(
        level=settings.PGAN_LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


cli.add_command(gen_data)
cli.add_command(train_command)
cli.add_command(pipeline_command)
cli.add_command(eval_command)


@cli.command("selfcheck")
def selfcheck():
    """
    Self check command.

    Runs gradient checks on every layer op, the structural audit at 32x32,
    the loss zero points, the SSIM oracle and the buffer statistics.

    Returns:
        Exit code 0 when every check is "ok", 3 otherwise.
    """
    response = run_self_check()
    for name, status in response.checks.items():
        click.echo(f"{name}: {status}")
    if not response.passed:
        failed = [name for name, status in response.checks.items() if status == SelfCheckStatus.FAIL]
        logger.error(f"Self check failed: {', '.join(failed)}")
        click.get_current_context().exit(NumericAbortError.exit_code)


if __name__ == "__main__":
    cli()
