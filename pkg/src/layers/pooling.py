import numpy as np

from autodiff.exceptions import InvalidShapeError
from autodiff.node import Node, Op
from autodiff.tensor import Tensor


def avg_pool2d(x: Node, factor: int) -> Node:
    """Mean over non-overlapping ``factor`` x ``factor`` blocks."""
    batch, channels, height, width = x.shape
    if factor < 1 or height % factor or width % factor:
        raise InvalidShapeError(
            f"pooling factor {factor} does not divide spatial extent {height}x{width}"
        )
    if factor == 1:
        return x
    blocks = x.value.reshape(batch, channels, height // factor, factor, width // factor, factor)

    def backward_fn(g: Tensor):
        spread = np.repeat(np.repeat(g, factor, axis=2), factor, axis=3)
        return (spread / (factor * factor),)

    return Node.from_op(blocks.mean(axis=(3, 5)), Op.AVG_POOL, (x,), backward_fn)
