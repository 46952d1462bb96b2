# type: ignore
from pathlib import Path
from typing import Literal, Mapping, Optional

from dotenv import dotenv_values
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from base_schema import BaseSchema
from exceptions import ConfigValidationError, StorageError


class BaseEnvSettings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


class Settings(BaseEnvSettings):
    PGAN_SEED: Optional[int] = Field(default=None)
    PGAN_LOG_LEVEL: str = Field(default="INFO")


class RunConfig(BaseSchema):
    """Flat run configuration shared by every command."""

    image_size: int = 128
    seed: int = Field(default=0, ge=0)
    epochs: int = Field(default=1, ge=0)
    lr: float = Field(default=0.0002, gt=0)
    beta1: float = Field(default=0.5, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    lambda1: float = Field(default=0.5, ge=0)
    lambda2: float = Field(default=0.5, ge=0)
    lambda3: float = Field(default=1.0, ge=0)
    lambda4: float = Field(default=10.0, ge=0)
    buffer_capacity: int = Field(default=50, ge=1)
    tau_diff: float = Field(default=0.06, gt=0, lt=1)
    checkpoint_every: int = Field(default=1000, ge=1)
    stage: int = Field(ge=1, le=4)
    data_dir: Path = Path("data")
    out_dir: Path

    base_width: int = Field(default=64, ge=1)
    disc_base_width: int = Field(default=64, ge=1)
    dense_width: int = Field(default=1024, ge=1)
    skip_resolutions: tuple[int, ...] = (4, 8, 16)
    condition_injection: Literal["all", "first"] = "all"
    n_train: int = Field(default=2000, ge=1)
    n_test: int = Field(default=200, ge=1)
    resume: Optional[Path] = None
    batch_size: int = Field(default=1, ge=1, le=1)

    @field_validator("image_size")
    @classmethod
    def check_image_size(cls, value: int) -> int:
        if value < 32 or value & (value - 1):
            raise ValueError(f"image_size must be a power of two >= 32, got {value}")
        return value

    @field_validator("skip_resolutions", mode="before")
    @classmethod
    def split_resolutions(cls, value):
        if isinstance(value, str):
            return tuple(int(item) for item in value.split(",") if item.strip())
        return value

    @field_validator("resume", mode="before")
    @classmethod
    def empty_resume(cls, value):
        return value or None


def parse_overrides(pairs: tuple[str, ...]) -> dict[str, str]:
    """Parse ``key=value`` pairs given on the command line.

    Args:
        pairs: Raw ``--set`` arguments.

    Returns:
        dict[str, str]: Overrides keyed by config key.

    Raises:
        ConfigValidationError: If a pair has no ``=``.
    """
    overrides = {}
    for pair in pairs:
        key, separator, value = pair.partition("=")
        if not separator or not key.strip():
            raise ConfigValidationError(f"override {pair!r} is not key=value")
        overrides[key.strip()] = value.strip()
    return overrides


def load_run_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, object]] = None,
    defaults: Optional[Mapping[str, object]] = None,
) -> RunConfig:
    """Load the run configuration.

    Precedence is defaults < config file < overrides < ``PGAN_SEED``.

    Args:
        path: Optional ``key=value`` config file.
        overrides: Values given with ``--set``.
        defaults: Command-level defaults for required keys.

    Returns:
        RunConfig: Validated configuration.

    Raises:
        StorageError: If the config file cannot be read.
        ConfigValidationError: If a key is unknown or a value is invalid.
    """
    values: dict[str, object] = dict(defaults or {})
    if path is not None:
        if not Path(path).is_file():
            raise StorageError(f"config file {path} does not exist")
        for key, value in dotenv_values(path, encoding="utf-8").items():
            if value is None:
                raise ConfigValidationError(f"config line {key!r} has no value")
            values[key] = value
    values.update(overrides or {})

    env_seed = Settings().PGAN_SEED
    if env_seed is not None:
        values["seed"] = env_seed

    try:
        return RunConfig(**values)
    except ValidationError as error:
        raise ConfigValidationError(str(error)) from error


settings = Settings()
