import numpy as np

from autodiff.exceptions import ContractError
from autodiff.tensor import RngState, Tensor

REPLAY_PROBABILITY = 0.5


class ImageBuffer:
    """History of generated images shown to the discriminator.

    Until full, every query stores and returns its image. Afterwards half
    of the queries swap the incoming image for a random stored one.
    """

    def __init__(self, capacity: int, rng: RngState):
        if capacity < 1:
            raise ContractError(f"buffer capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.rng = rng
        self.store: list[Tensor] = []

    def __len__(self) -> int:
        return len(self.store)

    def query(self, incoming: Tensor) -> Tensor:
        if len(self.store) < self.capacity:
            self.store.append(np.array(incoming, copy=True))
            return incoming
        if self.rng.random() < REPLAY_PROBABILITY:
            return incoming
        index = int(self.rng.integers(0, self.capacity))
        stored = self.store[index]
        self.store[index] = np.array(incoming, copy=True)
        return stored


def buffer_query(buffer: ImageBuffer, incoming: Tensor) -> Tensor:
    return buffer.query(incoming)
