"""Per-stage training examples drawn from the procedural world.

Every draw comes from the ``rng`` passed in, pose first, so a sample is
fully determined by (stage, seed, size).
"""
from typing import Callable, Iterator, Optional

import numpy as np
from PIL import Image

from autodiff.tensor import TRAIN_DTYPE, RngState, Tensor
from consts import PIPELINE_INPUT_ROLES, RNG_KEY_DATA, STAGE_CONDITION_ROLES
from networks.schemas import ConditionSet
from synth.exceptions import PoseDomainError
from synth.masks import composite_stage4, irregular_hole_mask
from synth.render import (
    random_garment,
    random_pose,
    render_body,
    render_garment,
    render_head,
    render_skeleton,
)
from synth.schemas import PoseParams, StageSample

STAGE2_ROTATIONS = (0.0, 15.0, -15.0, 30.0, -30.0)
STAGE2_MAX_SHIFT = 3


def _present_garment(garment: Tensor, mask: Tensor, angle: float, shift: tuple[int, int]) -> Tensor:
    """Rotate the garment about its mask centroid and shift it by whole pixels."""
    if angle == 0.0 and shift == (0, 0):
        return garment
    rows, cols = np.nonzero(mask)
    centre = (float(cols.mean()) + 0.5, float(rows.mean()) + 0.5)
    pixels = np.round(garment.transpose(1, 2, 0) * 255.0).astype(np.uint8)
    moved = Image.fromarray(pixels).rotate(
        angle, resample=Image.Resampling.NEAREST, center=centre, translate=shift, fillcolor=(0, 0, 0)
    )
    return (np.asarray(moved, dtype=TRAIN_DTYPE) / 255.0).transpose(2, 0, 1)


def _dressed_body(pose: PoseParams, garment: Tensor, garment_mask: Tensor, size: int):
    body, silhouette = render_body(pose, size)
    segmented = body * (1.0 - garment_mask[np.newaxis])
    clean = segmented * (1.0 - garment_mask[np.newaxis]) + garment * garment_mask[np.newaxis]
    return segmented, clean.astype(TRAIN_DTYPE), np.maximum(silhouette, garment_mask)


def make_stage1_sample(rng: RngState, size: int, pose: Optional[PoseParams] = None) -> StageSample:
    """Garment transformation: canonical garment + skeleton -> posed garment.

    Passing ``pose`` overrides the drawn pose; the garment draw is unchanged.
    """
    drawn = random_pose(rng)
    pose = pose or drawn
    garment_params = random_garment(rng)
    reference, _ = render_garment(PoseParams.canonical(), garment_params, size)
    target, mask = render_garment(pose, garment_params, size)
    return StageSample(
        stage=1,
        seed=rng.seed,
        conditions=ConditionSet.from_images(
            [render_skeleton(pose, size), reference], STAGE_CONDITION_ROLES[1]
        ),
        target=target,
        masks={"garment": mask},
    )


def make_stage2_sample(rng: RngState, size: int, augment: bool = True) -> StageSample:
    """Garment stitching: segmented body + skeleton + loose garment -> dressed body.

    The presented garment is rotated and shifted; the target depends on
    the pose only, so ``augment=False`` yields the same target.
    """
    pose = random_pose(rng)
    garment_params = random_garment(rng)
    garment, garment_mask = render_garment(pose, garment_params, size)
    segmented, clean, silhouette = _dressed_body(pose, garment, garment_mask, size)
    head, head_mask = render_head(pose, size)

    angle = float(rng.choice(STAGE2_ROTATIONS))
    shift = tuple(int(value) for value in rng.integers(-STAGE2_MAX_SHIFT, STAGE2_MAX_SHIFT + 1, 2))
    if not augment:
        angle, shift = 0.0, (0, 0)
    presented = _present_garment(garment, garment_mask, angle, shift)

    return StageSample(
        stage=2,
        seed=rng.seed,
        conditions=ConditionSet.from_images(
            [segmented, render_skeleton(pose, size), presented], STAGE_CONDITION_ROLES[2]
        ),
        target=clean,
        masks={"garment": garment_mask, "silhouette": silhouette, "head": head_mask},
        extras={"head": head},
    )


def make_stage3_sample(rng: RngState, size: int) -> StageSample:
    """Inpainting: dressed body with irregular holes + hole mask -> dressed body."""
    pose = random_pose(rng)
    garment_params = random_garment(rng)
    garment, garment_mask = render_garment(pose, garment_params, size)
    _, clean, silhouette = _dressed_body(pose, garment, garment_mask, size)
    holes = irregular_hole_mask(rng, silhouette)
    stitched = (clean * (1.0 - holes[np.newaxis])).astype(TRAIN_DTYPE)
    return StageSample(
        stage=3,
        seed=rng.seed,
        conditions=ConditionSet.from_images([stitched, holes[np.newaxis]], STAGE_CONDITION_ROLES[3]),
        target=clean,
        masks={"hole": holes, "silhouette": silhouette},
    )


def make_stage4_sample(rng: RngState, size: int) -> StageSample:
    """Raw pipeline inputs and the final dressed figure with the head restored."""
    pose = random_pose(rng)
    garment_params = random_garment(rng)
    reference, _ = render_garment(PoseParams.canonical(), garment_params, size)
    garment, garment_mask = render_garment(pose, garment_params, size)
    segmented, clean, silhouette = _dressed_body(pose, garment, garment_mask, size)
    head, head_mask = render_head(pose, size)
    no_fill = np.zeros_like(head_mask)
    return StageSample(
        stage=4,
        seed=rng.seed,
        conditions=ConditionSet.from_images(
            [render_skeleton(pose, size), reference, segmented], PIPELINE_INPUT_ROLES
        ),
        target=composite_stage4(clean, clean, no_fill, head, head_mask),
        masks={"garment": garment_mask, "silhouette": silhouette, "head": head_mask},
        extras={"head": head},
    )


SAMPLE_MAKERS: dict[int, Callable[[RngState, int], StageSample]] = {
    1: make_stage1_sample,
    2: make_stage2_sample,
    3: make_stage3_sample,
    4: make_stage4_sample,
}


def make_sample(stage: int, seed: int, size: int) -> StageSample:
    if stage not in SAMPLE_MAKERS:
        raise PoseDomainError(f"unknown stage {stage}")
    return SAMPLE_MAKERS[stage](RngState(seed, (RNG_KEY_DATA, stage)), size)


def sample_seeds(base_seed: int, n_train: int, n_test: int) -> dict[str, range]:
    """Contiguous seed ranges per split; test seeds follow the training seeds."""
    return {
        "train": range(base_seed, base_seed + n_train),
        "test": range(base_seed + n_train, base_seed + n_train + n_test),
    }


def iter_samples(stage: int, seeds: range, size: int) -> Iterator[StageSample]:
    for seed in seeds:
        yield make_sample(stage, seed, size)
