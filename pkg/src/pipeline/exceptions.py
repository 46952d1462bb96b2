from exceptions import StorageError, ValidationFailedError


class PipelineMismatchError(ValidationFailedError):
    prefix = "Pipeline inputs disagree"


class MissingInputError(StorageError):
    prefix = "Pipeline input missing"
