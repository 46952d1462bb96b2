"""Dense tensors and the deterministic random source.

Tensors are plain numpy arrays in row-major (C) order; images use the
batch x channels x height x width layout.
"""
from typing import Any, Optional, Sequence

import numpy as np
import numpy.typing as npt

from autodiff.exceptions import InvalidShapeError

Tensor = npt.NDArray[np.floating]

TRAIN_DTYPE = np.float32
CHECK_DTYPE = np.float64


def check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    """Validate a tensor shape.

    Args:
        shape: Extents.

    Returns:
        tuple[int, ...]: The shape as a tuple.

    Raises:
        InvalidShapeError: If an extent is below 1.
    """
    extents = tuple(int(extent) for extent in shape)
    if any(extent < 1 for extent in extents):
        raise InvalidShapeError(f"extents must be >= 1, got {list(extents)}")
    return extents


def zeros(shape: Sequence[int], dtype: npt.DTypeLike = TRAIN_DTYPE) -> Tensor:
    return np.zeros(check_shape(shape), dtype=dtype)


def full(shape: Sequence[int], value: float, dtype: npt.DTypeLike = TRAIN_DTYPE) -> Tensor:
    return np.full(check_shape(shape), value, dtype=dtype)


def randn(
    shape: Sequence[int], rng: "RngState", dtype: npt.DTypeLike = TRAIN_DTYPE
) -> Tensor:
    """Draw i.i.d. standard normal values from ``rng``."""
    return rng.normal(check_shape(shape)).astype(dtype)


class RngState:
    """Seeded Philox stream.

    Philox is counter-based, so a stream is fully described by its key and
    counter and yields the same draws on every platform. ``split`` derives
    independent child streams from the seed and integer keys.
    """

    def __init__(self, seed: int, keys: Sequence[int] = ()):
        if seed < 0 or seed >= 2**64:
            raise InvalidShapeError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = int(seed)
        self.keys = tuple(int(key) for key in keys)
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.keys)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def split(self, *keys: int) -> "RngState":
        return RngState(self.seed, self.keys + tuple(keys))

    def normal(self, shape: Sequence[int]) -> np.ndarray:
        return self._generator.standard_normal(tuple(shape), dtype=np.float64)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: Optional[Any] = None):
        return self._generator.uniform(low, high, size)

    def integers(self, low: int, high: int, size: Optional[Any] = None):
        """Draw integers in ``[low, high)``."""
        return self._generator.integers(low, high, size)

    def random(self) -> float:
        return float(self._generator.random())

    def permutation(self, n: int) -> np.ndarray:
        return self._generator.permutation(n)

    def choice(self, options: Sequence[Any]) -> Any:
        return options[int(self._generator.integers(0, len(options)))]

    def get_state(self) -> dict:
        """Return a JSON-friendly snapshot of the stream position."""
        state = self._generator.bit_generator.state
        return {
            "seed": self.seed,
            "keys": list(self.keys),
            "counter": [int(value) for value in state["state"]["counter"]],
            "key": [int(value) for value in state["state"]["key"]],
            "buffer": [int(value) for value in state["buffer"]],
            "buffer_pos": int(state["buffer_pos"]),
            "has_uint32": int(state["has_uint32"]),
            "uinteger": int(state["uinteger"]),
        }

    @classmethod
    def from_state(cls, snapshot: dict) -> "RngState":
        rng = cls(snapshot["seed"], snapshot["keys"])
        rng._generator.bit_generator.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array(snapshot["counter"], dtype=np.uint64),
                "key": np.array(snapshot["key"], dtype=np.uint64),
            },
            "buffer": np.array(snapshot["buffer"], dtype=np.uint64),
            "buffer_pos": snapshot["buffer_pos"],
            "has_uint32": snapshot["has_uint32"],
            "uinteger": snapshot["uinteger"],
        }
        return rng
