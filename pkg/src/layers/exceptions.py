from exceptions import NumericAbortError, ValidationFailedError


class DegenerateInputError(ValidationFailedError):
    prefix = "Degenerate input"


class NonFiniteGradientError(NumericAbortError):
    prefix = "Non-finite gradient"

    def __init__(self, name: str):
        super().__init__(f"parameter {name!r} received a non-finite gradient")
