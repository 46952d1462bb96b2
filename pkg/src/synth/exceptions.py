from exceptions import StorageError, ValidationFailedError


class PoseDomainError(ValidationFailedError):
    prefix = "Pose parameters out of bounds"


class MaskError(ValidationFailedError):
    prefix = "Invalid mask"


class MissingDatasetError(StorageError):
    prefix = "Dataset not found"
