class PolyGanError(Exception):
    exit_code = 1
    prefix = "Poly-GAN error"

    def __init__(self, details: str = ""):
        self.details = details
        super().__init__(f"{self.prefix}. {details}.")


class ValidationFailedError(PolyGanError):
    exit_code = 1
    prefix = "Validation failed"


class StorageError(PolyGanError):
    exit_code = 2
    prefix = "I/O failure"


class NumericAbortError(PolyGanError):
    exit_code = 3
    prefix = "Numeric abort"


class ConfigValidationError(ValidationFailedError):
    prefix = "Invalid configuration"
