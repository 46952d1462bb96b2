from pydantic import Field, field_validator

from base_schema import BaseSchema


class SsimParams(BaseSchema):
    window: int = Field(default=11, ge=1)
    sigma: float = Field(default=1.5, gt=0)
    k1: float = Field(default=0.01, gt=0)
    k2: float = Field(default=0.03, gt=0)
    dynamic_range: float = Field(default=1.0, gt=0)

    @field_validator("window")
    @classmethod
    def check_odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"window must be odd, got {value}")
        return value

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


class PairScore(BaseSchema):
    file: str
    ssim: float


class SsimReport(BaseSchema):
    pairs: list[PairScore]
    mean: float
    count: int
