from exceptions import NumericAbortError, ValidationFailedError


class InvalidShapeError(ValidationFailedError):
    prefix = "Invalid shape"


class ShapeMismatchError(ValidationFailedError):
    prefix = "Shape mismatch"

    def __init__(self, op: str, first: tuple[int, ...], second: tuple[int, ...]):
        super().__init__(f"{op} got shapes {list(first)} and {list(second)}")


class ContractError(ValidationFailedError):
    prefix = "Contract violated"


class NonFiniteError(NumericAbortError):
    prefix = "Non-finite value"
