from typing import Literal, Sequence

import numpy as np
from pydantic import Field, model_validator

from base_schema import ArraySchema, BaseSchema
from networks.exceptions import GeneratorSpecError

COARSE_SKIP_RESOLUTIONS = (4, 8, 16)
BOTTLENECK_RESOLUTION = 4
WIDTH_CAP_EXPONENT = 3
SRGAN_WIDTH_MULTIPLIERS = (1, 1, 2, 2, 4, 4, 8, 8)


class ConditionSet(ArraySchema):
    """Ordered condition images, each B x c x H x W.

    Order is part of the value: two sets holding the same images in a
    different order are unequal.
    """

    images: list[np.ndarray] = Field(min_length=1)
    order: tuple[str, ...]

    @model_validator(mode="after")
    def check_images(self) -> "ConditionSet":
        if len(self.images) != len(self.order):
            raise ValueError(f"{len(self.images)} images for roles {self.order}")
        shapes = [image.shape for image in self.images]
        if any(len(shape) != 4 for shape in shapes):
            raise ValueError(f"condition images must be B x c x H x W, got {shapes}")
        outer = {(shape[0], shape[2], shape[3]) for shape in shapes}
        if len(outer) != 1:
            raise ValueError(f"condition images disagree on batch or size: {shapes}")
        return self

    @classmethod
    def from_images(cls, images: Sequence[np.ndarray], order: Sequence[str]) -> "ConditionSet":
        """Build a set from C x H x W images, adding the batch axis."""
        return cls(images=[image[np.newaxis] for image in images], order=tuple(order))

    @property
    def channels(self) -> int:
        return sum(image.shape[1] for image in self.images)

    @property
    def size(self) -> int:
        return self.images[0].shape[-1]

    def stack(self) -> np.ndarray:
        return np.concatenate(self.images, axis=1)

    def permuted(self, permutation: Sequence[int]) -> "ConditionSet":
        return ConditionSet(
            images=[self.images[index] for index in permutation],
            order=tuple(self.order[index] for index in permutation),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConditionSet):
            return NotImplemented
        return self.order == other.order and all(
            np.array_equal(mine, theirs) for mine, theirs in zip(self.images, other.images)
        )


class GeneratorSpec(BaseSchema):
    input_channels: int = Field(ge=1)
    condition_channels: int = Field(ge=1)
    base_width: int = Field(default=64, ge=1)
    resolutions: tuple[int, ...]
    skip_resolutions: tuple[int, ...] = COARSE_SKIP_RESOLUTIONS
    output_channels: int = Field(default=3, ge=1)
    condition_injection: Literal["all", "first"] = "all"

    @model_validator(mode="after")
    def check_structure(self) -> "GeneratorSpec":
        if len(self.resolutions) < 2 or self.resolutions[-1] != BOTTLENECK_RESOLUTION:
            raise ValueError(f"resolutions must halve down to 4, got {self.resolutions}")
        for coarse, fine in zip(self.resolutions[1:], self.resolutions):
            if fine != 2 * coarse:
                raise ValueError(f"resolutions must strictly halve, got {self.resolutions}")
        unknown = set(self.skip_resolutions) - set(self.resolutions)
        if unknown:
            raise ValueError(f"skip resolutions {sorted(unknown)} are not encoder resolutions")
        if self.input_channels != self.condition_channels:
            raise ValueError("the encoder stem consumes the full condition stack")
        return self

    @classmethod
    def for_image_size(
        cls,
        image_size: int,
        condition_channels: int,
        base_width: int = 64,
        skip_resolutions: Sequence[int] = COARSE_SKIP_RESOLUTIONS,
        condition_injection: Literal["all", "first"] = "all",
    ) -> "GeneratorSpec":
        """Spec whose encoder halves ``image_size`` down to the 4x4 bottleneck.

        Raises:
            GeneratorSpecError: If a requested skip resolution is not an encoder resolution.
        """
        resolutions = []
        resolution = image_size
        while resolution >= BOTTLENECK_RESOLUTION:
            resolutions.append(resolution)
            resolution //= 2
        unknown = sorted(set(skip_resolutions) - set(resolutions))
        if unknown:
            raise GeneratorSpecError(f"skip resolutions {unknown} are not among {tuple(resolutions)}")
        return cls(
            input_channels=condition_channels,
            condition_channels=condition_channels,
            base_width=base_width,
            resolutions=tuple(resolutions),
            skip_resolutions=tuple(sorted(set(skip_resolutions))),
            condition_injection=condition_injection,
        )

    @property
    def image_size(self) -> int:
        return self.resolutions[0]

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(
            self.base_width * 2 ** min(stage, WIDTH_CAP_EXPONENT)
            for stage in range(len(self.resolutions))
        )


class DiscriminatorSpec(BaseSchema):
    """Strided conv blocks (stride 1, 2, 1, 2, ...) followed by a dense head."""

    image_size: int = Field(ge=4)
    in_channels: int = Field(default=3, ge=1)
    widths: tuple[int, ...] = Field(min_length=1)
    dense_width: int = Field(default=1024, ge=1)

    @model_validator(mode="after")
    def check_extent(self) -> "DiscriminatorSpec":
        if self.image_size % (2 ** self.downsamplings) or self.final_size < 2:
            raise ValueError(
                f"{len(self.widths)} blocks cannot reduce a {self.image_size} image to >= 2"
            )
        return self

    @classmethod
    def for_image_size(
        cls, image_size: int, base_width: int = 64, dense_width: int = 1024
    ) -> "DiscriminatorSpec":
        multipliers = SRGAN_WIDTH_MULTIPLIERS
        if image_size < 128:
            multipliers = multipliers[: len(multipliers) // 2]
        return cls(
            image_size=image_size,
            widths=tuple(base_width * multiplier for multiplier in multipliers),
            dense_width=dense_width,
        )

    @property
    def strides(self) -> tuple[int, ...]:
        return tuple(1 if index % 2 == 0 else 2 for index in range(len(self.widths)))

    @property
    def downsamplings(self) -> int:
        return sum(1 for stride in self.strides if stride == 2)

    @property
    def final_size(self) -> int:
        return self.image_size // 2 ** self.downsamplings


class GraphAudit(BaseSchema):
    encoder_stages: int
    condition_injections: int
    skip_resolutions: tuple[int, ...]
    encoder_widths: tuple[int, ...]
    fusion_input_widths: tuple[int, ...]
