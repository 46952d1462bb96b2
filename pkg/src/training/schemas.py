from typing import Any

import numpy as np
from pydantic import Field, field_validator

from base_schema import ArraySchema, BaseSchema
from consts import CHECKPOINT_VERSION, STAGE_CONDITION_CHANNELS, STAGE_CONDITION_ROLES
from exceptions import ConfigValidationError
from losses.schemas import LossConfig
from networks.schemas import DiscriminatorSpec, GeneratorSpec
from settings import RunConfig


class TrainConfig(BaseSchema):
    lr: float = Field(default=0.0002, gt=0)
    beta1: float = Field(default=0.5, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    batch_size: int = Field(default=1, ge=1, le=1)
    image_size: int = 128
    epochs: int = Field(default=1, ge=0)
    seed: int = Field(default=0, ge=0)
    loss: LossConfig = Field(default_factory=LossConfig)
    checkpoint_every: int = Field(default=1000, ge=1)
    buffer_capacity: int = Field(default=50, ge=1)

    @field_validator("image_size")
    @classmethod
    def check_image_size(cls, value: int) -> int:
        if value < 32 or value & (value - 1):
            raise ValueError(f"image_size must be a power of two >= 32, got {value}")
        return value

    @classmethod
    def from_run_config(cls, config: RunConfig) -> "TrainConfig":
        return cls(
            lr=config.lr,
            beta1=config.beta1,
            beta2=config.beta2,
            batch_size=config.batch_size,
            image_size=config.image_size,
            epochs=config.epochs,
            seed=config.seed,
            loss=LossConfig(
                lambda1=config.lambda1,
                lambda2=config.lambda2,
                lambda3=config.lambda3,
                lambda4=config.lambda4,
            ),
            checkpoint_every=config.checkpoint_every,
            buffer_capacity=config.buffer_capacity,
        )


class StageTask(BaseSchema):
    """What one trained generator maps from: its condition roles and channels."""

    stage: int = Field(ge=1, le=3)
    condition_roles: tuple[str, ...]
    condition_channels: tuple[int, ...]

    @classmethod
    def for_stage(cls, stage: int) -> "StageTask":
        if stage not in STAGE_CONDITION_ROLES:
            raise ConfigValidationError(f"stage {stage} has no generator to train")
        return cls(
            stage=stage,
            condition_roles=STAGE_CONDITION_ROLES[stage],
            condition_channels=STAGE_CONDITION_CHANNELS[stage],
        )

    @property
    def total_channels(self) -> int:
        return sum(self.condition_channels)


class CheckpointHeader(BaseSchema):
    """JSON part of a checkpoint file."""

    version: int = CHECKPOINT_VERSION
    stage: int
    step: int = Field(ge=0)
    config: dict[str, Any]
    generator_spec: GeneratorSpec
    discriminator_spec: DiscriminatorSpec
    generator_adam_t: int = 0
    discriminator_adam_t: int = 0
    buffer_rng: dict[str, Any]
    buffer_size: int = 0


class Checkpoint(ArraySchema):
    header: CheckpointHeader
    tensors: dict[str, np.ndarray]

    def section(self, prefix: str) -> dict[str, np.ndarray]:
        """Tensors under ``prefix/`` with the prefix stripped."""
        marker = f"{prefix}/"
        return {
            name[len(marker):]: value for name, value in self.tensors.items() if name.startswith(marker)
        }
