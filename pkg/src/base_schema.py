from pydantic import BaseModel, ConfigDict


class BaseSchema(BaseModel):
    model_config = ConfigDict(from_attributes=True, extra="forbid")


class ArraySchema(BaseSchema):
    """Schema that may hold numpy arrays as field values."""

    model_config = ConfigDict(
        from_attributes=True, extra="forbid", arbitrary_types_allowed=True
    )
