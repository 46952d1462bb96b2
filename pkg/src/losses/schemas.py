from pydantic import Field, model_validator

from base_schema import BaseSchema
from consts import FAKE_LABEL, REAL_LABEL


class LossConfig(BaseSchema):
    lambda1: float = Field(default=0.5, ge=0)
    lambda2: float = Field(default=0.5, ge=0)
    lambda3: float = Field(default=1.0, ge=0)
    lambda4: float = Field(default=10.0, ge=0)
    real_label: float = REAL_LABEL
    fake_label: float = FAKE_LABEL

    @model_validator(mode="after")
    def check_labels(self) -> "LossConfig":
        if self.real_label == self.fake_label:
            raise ValueError("real and fake labels must differ")
        return self


class LossReport(BaseSchema):
    step: int = 0
    d_loss: float
    g_gan: float
    g_id: float
