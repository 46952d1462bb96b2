"""Alternating discriminator/generator optimisation for one stage."""
import csv
import logging
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from autodiff.exceptions import ShapeMismatchError
from autodiff.node import Node, backward, constant
from autodiff.tensor import RngState
from consts import LOSS_CSV_FILE, LOSS_CSV_HEADER, RNG_KEY_BUFFER, RNG_KEY_DISCRIMINATOR, RNG_KEY_GENERATOR, RNG_KEY_ORDER
from exceptions import StorageError
from layers.module import Module
from layers.optim import Adam
from losses.losses import discriminator_loss, generator_gan_loss, identity_loss, total_generator_loss
from losses.schemas import LossReport
from networks.discriminator import Discriminator, build_discriminator
from networks.generator import Generator, build_generator
from networks.schemas import DiscriminatorSpec, GeneratorSpec
from settings import RunConfig
from synth.schemas import StageSample
from training.buffer import ImageBuffer
from training.checkpoint import checkpoint_load
from training.exceptions import TrainingAbortedError
from training.repository import CheckpointRepository
from training.schemas import Checkpoint, CheckpointHeader, StageTask, TrainConfig

logger = logging.getLogger(__name__)


class TrainingState:
    """Everything one training loop owns: both networks, their optimisers and the buffer."""

    def __init__(
        self,
        generator: Module,
        discriminator: Module,
        config: TrainConfig,
        buffer_rng: RngState,
        step: int = 0,
    ):
        self.generator = generator
        self.discriminator = discriminator
        self.generator_optimizer = Adam(
            generator.parameters(), lr=config.lr, beta1=config.beta1, beta2=config.beta2
        )
        self.discriminator_optimizer = Adam(
            discriminator.parameters(), lr=config.lr, beta1=config.beta1, beta2=config.beta2
        )
        self.buffer = ImageBuffer(config.buffer_capacity, buffer_rng)
        self.step = step


def stage_specs(task: StageTask, config: RunConfig) -> tuple[GeneratorSpec, DiscriminatorSpec]:
    generator_spec = GeneratorSpec.for_image_size(
        config.image_size,
        task.total_channels,
        base_width=config.base_width,
        skip_resolutions=config.skip_resolutions,
        condition_injection=config.condition_injection,
    )
    discriminator_spec = DiscriminatorSpec.for_image_size(
        config.image_size, base_width=config.disc_base_width, dense_width=config.dense_width
    )
    return generator_spec, discriminator_spec


def build_training_state(
    config: TrainConfig, generator_spec: GeneratorSpec, discriminator_spec: DiscriminatorSpec
) -> TrainingState:
    root = RngState(config.seed)
    return TrainingState(
        generator=build_generator(generator_spec, root.split(RNG_KEY_GENERATOR)),
        discriminator=build_discriminator(discriminator_spec, root.split(RNG_KEY_DISCRIMINATOR)),
        config=config,
        buffer_rng=root.split(RNG_KEY_BUFFER),
    )


def _checked(loss: Node, name: str, step: int) -> float:
    value = float(loss.value.reshape(-1)[0])
    if not np.isfinite(value):
        raise TrainingAbortedError(step, name)
    return value


def train_step(state: TrainingState, sample: StageSample, config: TrainConfig) -> LossReport:
    """One discriminator update followed by one generator update.

    The discriminator sees the target and a buffered, detached fake. The
    generator is then scored on a fresh fake; only its own parameters move.

    Raises:
        TrainingAbortedError: If a loss is not finite.
    """
    step = state.step + 1
    conditions = sample.network_conditions()
    target = constant(sample.network_target())

    fake = state.generator(conditions)
    replayed = state.buffer.query(fake.value)
    d_loss = discriminator_loss(
        state.discriminator(target), state.discriminator(constant(replayed)), config.loss
    )
    d_value = _checked(d_loss, "d_loss", step)
    state.discriminator_optimizer.step(backward(d_loss))

    fake = state.generator(conditions)
    g_gan = generator_gan_loss(state.discriminator(fake), config.loss)
    g_id = identity_loss(fake, target, config.loss)
    g_total = total_generator_loss(g_gan, g_id)
    gan_value = _checked(g_gan, "g_gan", step)
    id_value = _checked(g_id, "g_id", step)
    state.generator_optimizer.step(backward(g_total))

    state.step = step
    return LossReport(step=step, d_loss=d_value, g_gan=gan_value, g_id=id_value)


def capture_checkpoint(
    state: TrainingState, stage: int, config_echo: Mapping[str, Any]
) -> Checkpoint:
    tensors = {}
    for prefix, arrays in (
        ("generator", state.generator.state_dict()),
        ("discriminator", state.discriminator.state_dict()),
        ("generator_adam", state.generator_optimizer.moments()),
        ("discriminator_adam", state.discriminator_optimizer.moments()),
    ):
        tensors.update({f"{prefix}/{name}": value for name, value in arrays.items()})
    for index, image in enumerate(state.buffer.store):
        tensors[f"buffer/{index:04d}"] = image
    header = CheckpointHeader(
        stage=stage,
        step=state.step,
        config=dict(config_echo),
        generator_spec=state.generator.spec,
        discriminator_spec=state.discriminator.spec,
        generator_adam_t=state.generator_optimizer.t,
        discriminator_adam_t=state.discriminator_optimizer.t,
        buffer_rng=state.buffer.rng.get_state(),
        buffer_size=len(state.buffer),
    )
    return Checkpoint(header=header, tensors=tensors)


def load_generator(checkpoint: Checkpoint) -> Generator:
    generator = build_generator(checkpoint.header.generator_spec, RngState(0))
    generator.load_state_dict(checkpoint.section("generator"))
    return generator


def load_discriminator(checkpoint: Checkpoint) -> Discriminator:
    discriminator = build_discriminator(checkpoint.header.discriminator_spec, RngState(0))
    discriminator.load_state_dict(checkpoint.section("discriminator"))
    return discriminator


def restore_training_state(checkpoint: Checkpoint, config: TrainConfig) -> TrainingState:
    header = checkpoint.header
    state = TrainingState(
        generator=load_generator(checkpoint),
        discriminator=load_discriminator(checkpoint),
        config=config,
        buffer_rng=RngState.from_state(header.buffer_rng),
        step=header.step,
    )
    state.generator_optimizer.load_moments(checkpoint.section("generator_adam"), header.generator_adam_t)
    state.discriminator_optimizer.load_moments(
        checkpoint.section("discriminator_adam"), header.discriminator_adam_t
    )
    buffered = checkpoint.section("buffer")
    state.buffer.store = [buffered[name] for name in sorted(buffered)]
    return state


def epoch_order(seed: int, epoch: int, count: int) -> np.ndarray:
    return RngState(seed, (RNG_KEY_ORDER, epoch)).permutation(count)


def _open_loss_csv(path: Path, resumed_step: Optional[int]):
    kept: list[list[str]] = []
    if resumed_step is not None and path.is_file():
        with open(path, newline="", encoding="utf-8") as stream:
            rows = list(csv.reader(stream))
        kept = [row for row in rows[1:] if row and int(row[0]) <= resumed_step]
    stream = open(path, "w", newline="", encoding="utf-8")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(LOSS_CSV_HEADER)
    writer.writerows(kept)
    return stream, writer


def train(
    task: StageTask,
    dataset: Sequence[StageSample],
    config: TrainConfig,
    out_dir: Path,
    generator_spec: GeneratorSpec,
    discriminator_spec: DiscriminatorSpec,
    config_echo: Optional[Mapping[str, Any]] = None,
    resume: Optional[Path] = None,
) -> Path:
    """Train one stage and write checkpoints plus the loss curve.

    Runs ``epochs * len(dataset)`` steps, visiting the dataset in a fresh
    seeded permutation each epoch.

    Args:
        task: Stage being trained.
        dataset: Training samples for ``task``.
        config: Optimisation settings.
        out_dir: Receives ``losses.csv`` and ``checkpoints/``.
        generator_spec: Generator layout.
        discriminator_spec: Discriminator layout.
        config_echo: Run configuration stored in every checkpoint header.
        resume: Checkpoint to continue from.

    Returns:
        Path: The final checkpoint.

    Raises:
        TrainingAbortedError: If a loss turns non-finite.
        ShapeMismatchError: If a sample does not match ``config.image_size``.
    """
    if not dataset:
        raise StorageError(f"no training samples for stage {task.stage}")
    wrong = [sample.seed for sample in dataset if sample.size != config.image_size]
    if wrong:
        raise ShapeMismatchError(
            "dataset", (dataset[0].size, dataset[0].size), (config.image_size, config.image_size)
        )
    echo = dict(config_echo or config.model_dump(mode="json"))
    out_dir = Path(out_dir)
    repository = CheckpointRepository(out_dir)

    if resume is not None:
        state = restore_training_state(checkpoint_load(resume), config)
        logger.info(f"Resuming stage {task.stage} from step {state.step} ({resume})")
    else:
        state = build_training_state(config, generator_spec, discriminator_spec)

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        stream, writer = _open_loss_csv(out_dir / LOSS_CSV_FILE, state.step if resume else None)
    except OSError as error:
        raise StorageError(f"cannot write the loss curve in {out_dir}: {error}") from error

    total_steps = config.epochs * len(dataset)
    order_epoch, order = -1, None
    with stream:
        while state.step < total_steps:
            epoch, position = divmod(state.step, len(dataset))
            if epoch != order_epoch:
                order_epoch, order = epoch, epoch_order(config.seed, epoch, len(dataset))
            report = train_step(state, dataset[int(order[position])], config)
            writer.writerow([report.step, report.d_loss, report.g_gan, report.g_id])
            logger.debug(
                f"step {report.step}: d_loss={report.d_loss:.6f} "
                f"g_gan={report.g_gan:.6f} g_id={report.g_id:.6f}"
            )
            if state.step % config.checkpoint_every == 0:
                stream.flush()
                path = repository.add(capture_checkpoint(state, task.stage, echo))
                logger.info(f"Stage {task.stage} step {state.step}/{total_steps}: saved {path}")

    final = repository.add_final(capture_checkpoint(state, task.stage, echo))
    logger.info(f"Stage {task.stage} finished after {state.step} steps: {final}")
    return final
