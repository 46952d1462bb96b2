"""Four-stage inference: transform, stitch, inpaint, restore the head."""
import logging
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from autodiff.tensor import TRAIN_DTYPE, Tensor
from consts import STAGE_CONDITION_ROLES
from networks.generator import Generator, generator_forward
from networks.schemas import ConditionSet
from pipeline.exceptions import MissingInputError, PipelineMismatchError
from pipeline.schemas import INPUT_FILES, SILHOUETTE_FILE, PipelineInputs, PipelineResult
from services.png.png import png_read, png_write
from synth.masks import composite_stage4, difference_mask, nonblack
from synth.schemas import StageSample
from training.checkpoint import checkpoint_load
from training.trainer import load_generator

logger = logging.getLogger(__name__)

TRAINED_STAGES = (1, 2, 3)


def to_network(image: Tensor) -> Tensor:
    return (image * 2.0 - 1.0).astype(TRAIN_DTYPE)


def from_network(image: Tensor) -> Tensor:
    return np.clip((image + 1.0) / 2.0, 0.0, 1.0).astype(TRAIN_DTYPE)


def run_generator(generator: Generator, images: Sequence[Tensor], roles: Sequence[str]) -> Tensor:
    """Run one stage generator on [0, 1] condition images and return a [0, 1] image."""
    conditions = ConditionSet.from_images([to_network(image) for image in images], roles)
    return from_network(generator_forward(generator, conditions)[0])


def load_stage_generators(checkpoints: Sequence[Path]) -> dict[int, Generator]:
    """Load the Stage 1-3 generators, in stage order.

    Raises:
        PipelineMismatchError: If a checkpoint belongs to another stage or
            the image sizes disagree.
    """
    if len(checkpoints) != len(TRAINED_STAGES):
        raise PipelineMismatchError(f"expected {len(TRAINED_STAGES)} checkpoints, got {len(checkpoints)}")
    generators = {}
    for stage, path in zip(TRAINED_STAGES, checkpoints):
        checkpoint = checkpoint_load(path)
        if checkpoint.header.stage != stage:
            raise PipelineMismatchError(f"{path} holds stage {checkpoint.header.stage}, expected {stage}")
        generators[stage] = load_generator(checkpoint)
    sizes = {stage: generator.spec.image_size for stage, generator in generators.items()}
    if len(set(sizes.values())) != 1:
        raise PipelineMismatchError(f"checkpoint image sizes differ: {sizes}")
    return generators


def read_pipeline_inputs(input_dir: Path) -> PipelineInputs:
    """Read ``skeleton``, ``garment``, ``body`` and ``head`` PNGs, plus an optional silhouette.

    The head mask is the alpha channel of ``head.png`` when present, its
    non-black pixels otherwise.
    """
    input_dir = Path(input_dir)
    missing = [name for name in INPUT_FILES.values() if not (input_dir / name).is_file()]
    if missing:
        raise MissingInputError(f"{', '.join(missing)} not found in {input_dir}")

    head = png_read(input_dir / INPUT_FILES["head"])
    if head.shape[0] == 4:
        head_rgb, head_mask = head[:3], (head[3] > 0.5).astype(TRAIN_DTYPE)
    else:
        head_rgb = head if head.shape[0] == 3 else np.repeat(head, 3, axis=0)
        head_mask = nonblack(head_rgb)
    silhouette = None
    if (input_dir / SILHOUETTE_FILE).is_file():
        silhouette = (png_read(input_dir / SILHOUETTE_FILE, "L")[0] > 0.5).astype(TRAIN_DTYPE)
    return PipelineInputs(
        skeleton=png_read(input_dir / INPUT_FILES["skeleton"], "RGB"),
        garment=png_read(input_dir / INPUT_FILES["garment"], "RGB"),
        body=png_read(input_dir / INPUT_FILES["body"], "RGB"),
        head=head_rgb * head_mask[np.newaxis],
        head_mask=head_mask,
        silhouette=silhouette,
    )


def inputs_from_sample(sample: StageSample, with_silhouette: bool = True) -> PipelineInputs:
    """Pipeline inputs from a Stage-4 synthetic sample."""
    return PipelineInputs(
        skeleton=sample.condition("skeleton"),
        garment=sample.condition("garment"),
        body=sample.condition("body"),
        head=sample.extras["head"],
        head_mask=sample.masks["head"],
        silhouette=sample.masks["silhouette"] if with_silhouette else None,
    )


def run_pipeline(
    generators: Mapping[int, Generator], inputs: PipelineInputs, tau: float = 0.06
) -> PipelineResult:
    """Run all four stages.

    Raises:
        PipelineMismatchError: If the inputs do not match the generators' image size.
    """
    size = generators[1].spec.image_size
    if inputs.size != size or any(
        image.shape[-2:] != (size, size) for image in (inputs.garment, inputs.body, inputs.head)
    ):
        raise PipelineMismatchError(f"inputs are {inputs.size}px, checkpoints expect {size}px")

    stage1 = run_generator(generators[1], [inputs.skeleton, inputs.garment], STAGE_CONDITION_ROLES[1])
    stage2 = run_generator(
        generators[2], [inputs.body, inputs.skeleton, stage1], STAGE_CONDITION_ROLES[2]
    )
    silhouette = inputs.silhouette
    if silhouette is None:
        silhouette = np.maximum(nonblack(inputs.body), nonblack(stage1))
    diff = difference_mask(stage2, silhouette, tau)
    logger.debug(f"Difference mask covers {int(diff.sum())} of {int(silhouette.sum())} pixels")
    stitched = (stage2 * (1.0 - diff[np.newaxis])).astype(TRAIN_DTYPE)
    stage3 = run_generator(generators[3], [stitched, diff[np.newaxis]], STAGE_CONDITION_ROLES[3])

    no_fill = np.zeros_like(diff)
    return PipelineResult(
        stage1=stage1,
        stage2=stage2,
        diff_mask=diff,
        stage3=stage3,
        final=composite_stage4(stage2, stage3, diff, inputs.head, inputs.head_mask),
        stage2_head=composite_stage4(stage2, stage2, no_fill, inputs.head, inputs.head_mask),
        stage3_head=composite_stage4(stage3, stage3, no_fill, inputs.head, inputs.head_mask),
    )


def write_pipeline_outputs(result: PipelineResult, out_dir: Path) -> list[Path]:
    return [png_write(Path(out_dir) / name, image) for name, image in result.images().items()]
