import numpy as np

from autodiff.node import Node, Op

LEAKY_SLOPE = 0.2


def relu(x: Node) -> Node:
    mask = x.value > 0
    return Node.from_op(x.value * mask, Op.RELU, (x,), lambda g: (g * mask,))


def leaky_relu(x: Node, slope: float = LEAKY_SLOPE) -> Node:
    factor = np.where(x.value > 0, 1.0, slope).astype(x.dtype)
    return Node.from_op(x.value * factor, Op.LEAKY_RELU, (x,), lambda g: (g * factor,))


def tanh(x: Node) -> Node:
    value = np.tanh(x.value)
    return Node.from_op(value, Op.TANH, (x,), lambda g: (g * (1.0 - value * value),))
