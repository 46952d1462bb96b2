import numpy as np

from autodiff.exceptions import ShapeMismatchError
from autodiff.node import Node, Op, parameter
from autodiff.tensor import TRAIN_DTYPE, Tensor, full, zeros
from layers.exceptions import DegenerateInputError
from layers.module import Module


def instance_norm_op(
    x: Node, gamma: Node, beta: Node, epsilon: float = 1e-5
) -> Node:
    """Normalise every (batch, channel) plane over its H x W positions."""
    if x.value.ndim != 4 or gamma.shape != (x.shape[1],) or beta.shape != gamma.shape:
        raise ShapeMismatchError("instance_norm", x.shape, gamma.shape)
    count = x.shape[2] * x.shape[3]
    if count < 2:
        raise DegenerateInputError(
            f"instance_norm needs at least 2 positions per plane, got {list(x.shape)}"
        )
    centered = x.value - x.value.mean(axis=(2, 3), keepdims=True)
    variance = (centered * centered).mean(axis=(2, 3), keepdims=True)
    inv_std = 1.0 / np.sqrt(variance + epsilon)
    normalized = centered * inv_std
    gamma_view = gamma.value.reshape(1, -1, 1, 1)
    value = normalized * gamma_view + beta.value.reshape(1, -1, 1, 1)

    def backward_fn(g: Tensor):
        g_normalized = g * gamma_view
        g_x = inv_std * (
            g_normalized
            - g_normalized.mean(axis=(2, 3), keepdims=True)
            - normalized * (g_normalized * normalized).mean(axis=(2, 3), keepdims=True)
        )
        return (
            g_x,
            (g * normalized).sum(axis=(0, 2, 3)),
            g.sum(axis=(0, 2, 3)),
        )

    return Node.from_op(value, Op.INSTANCE_NORM, (x, gamma, beta), backward_fn)


class InstanceNormLayer(Module):
    def __init__(self, channels: int, epsilon: float = 1e-5, dtype=TRAIN_DTYPE):
        self.gamma = parameter(full((channels,), 1.0, dtype))
        self.beta = parameter(zeros((channels,), dtype))
        self.epsilon = epsilon

    def forward(self, x: Node) -> Node:
        return instance_norm(x, self)


def instance_norm(x: Node, layer: InstanceNormLayer) -> Node:
    return instance_norm_op(x, layer.gamma, layer.beta, layer.epsilon)
