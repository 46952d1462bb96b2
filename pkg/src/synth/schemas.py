from typing import Literal, Optional

import numpy as np
from pydantic import Field, field_validator, model_validator

from autodiff.tensor import TRAIN_DTYPE
from base_schema import ArraySchema, BaseSchema
from networks.schemas import ConditionSet

# Angles are degrees; offsets are fractions of the image side.
TORSO_ANGLE_LIMIT = 10.0
ARM_ANGLE_LIMIT = 75.0
SCALE_RANGE = (0.5, 1.0)
OFFSET_LIMIT = 0.03

RGB = tuple[int, int, int]


class PoseParams(BaseSchema):
    """Pose of the stick figure.

    Arm angles are measured downwards from the horizontal; the forearm
    angle is relative to the upper arm. Zero everywhere is the T-pose.
    """

    torso_angle: float = 0.0
    left_upper_arm: float = 0.0
    left_forearm: float = 0.0
    right_upper_arm: float = 0.0
    right_forearm: float = 0.0
    scale: float = 1.0
    offset_x: float = 0.0
    offset_y: float = 0.0

    @classmethod
    def canonical(cls) -> "PoseParams":
        return cls()

    def violations(self) -> list[str]:
        problems = []
        if abs(self.torso_angle) > TORSO_ANGLE_LIMIT:
            problems.append(f"torso_angle={self.torso_angle}")
        for name in ("left_upper_arm", "left_forearm", "right_upper_arm", "right_forearm"):
            if abs(getattr(self, name)) > ARM_ANGLE_LIMIT:
                problems.append(f"{name}={getattr(self, name)}")
        if not SCALE_RANGE[0] <= self.scale <= SCALE_RANGE[1]:
            problems.append(f"scale={self.scale}")
        for name in ("offset_x", "offset_y"):
            if abs(getattr(self, name)) > OFFSET_LIMIT:
                problems.append(f"{name}={getattr(self, name)}")
        return problems


class GarmentParams(BaseSchema):
    color: RGB
    texture: Literal["flat", "stripes"] = "flat"
    stripe_color: RGB = (255, 255, 255)
    stripe_period: int = Field(default=4, ge=2)
    sleeve_fraction: float = Field(default=0.6, gt=0, le=1)


class StageSample(ArraySchema):
    """One training or test example.

    Condition images and the target are stored in [0, 1]; the network
    helpers map them to [-1, 1] with a leading batch axis.
    """

    stage: int = Field(ge=1, le=4)
    seed: int
    conditions: ConditionSet
    target: np.ndarray
    masks: dict[str, np.ndarray] = Field(default_factory=dict)
    extras: dict[str, np.ndarray] = Field(default_factory=dict)

    @field_validator("masks")
    @classmethod
    def check_binary(cls, masks: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        for role, mask in masks.items():
            if mask.ndim != 2 or not np.isin(mask, (0.0, 1.0)).all():
                raise ValueError(f"mask {role!r} must be a binary H x W array")
        return masks

    @model_validator(mode="after")
    def check_sizes(self) -> "StageSample":
        size = self.conditions.size
        arrays = [self.target, *self.masks.values(), *self.extras.values()]
        if any(array.shape[-2:] != (size, size) for array in arrays):
            raise ValueError("all sample tensors must share H and W")
        return self

    @property
    def size(self) -> int:
        return self.conditions.size

    def network_conditions(self, dtype=TRAIN_DTYPE) -> ConditionSet:
        return ConditionSet(
            images=[(image * 2.0 - 1.0).astype(dtype) for image in self.conditions.images],
            order=self.conditions.order,
        )

    def network_target(self, dtype=TRAIN_DTYPE) -> np.ndarray:
        return (self.target * 2.0 - 1.0).astype(dtype)[np.newaxis]

    def condition(self, role: str) -> np.ndarray:
        """Return one condition image as C x H x W."""
        return self.conditions.images[self.conditions.order.index(role)][0]

    def mask(self, role: str) -> Optional[np.ndarray]:
        return self.masks.get(role)
