from exceptions import NumericAbortError, StorageError


class TrainingAbortedError(NumericAbortError):
    prefix = "Training aborted"

    def __init__(self, step: int, loss_name: str):
        self.step = step
        self.loss_name = loss_name
        super().__init__(f"{loss_name} is not finite at step {step}")


class CheckpointFormatError(StorageError):
    prefix = "Not a checkpoint"


class CheckpointCorruptedError(StorageError):
    prefix = "Checkpoint corrupted"
