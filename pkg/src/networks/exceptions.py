from exceptions import ValidationFailedError


class GeneratorSpecError(ValidationFailedError):
    prefix = "Invalid generator spec"
