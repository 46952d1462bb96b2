"""Elementwise, reduction and structural operations on graph nodes.

No implicit broadcasting: binary elementwise ops need identical shapes;
``scale`` multiplies by a Python scalar and ``bias_add`` adds a vector
along axis 1 explicitly.
"""
from typing import Sequence, Union

import numpy as np

from autodiff.exceptions import InvalidShapeError, ShapeMismatchError
from autodiff.node import Node, Op, constant
from autodiff.tensor import Tensor


def _same_shape(op: str, a: Node, b: Node) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(op, a.shape, b.shape)


def _as_node(value: Union[Node, Tensor]) -> Node:
    return value if isinstance(value, Node) else constant(np.asarray(value))


def add(a: Node, b: Node) -> Node:
    _same_shape("add", a, b)
    return Node.from_op(a.value + b.value, Op.ADD, (a, b), lambda g: (g, g))


def mul(a: Node, b: Node) -> Node:
    _same_shape("mul", a, b)
    return Node.from_op(
        a.value * b.value, Op.MUL, (a, b), lambda g: (g * b.value, g * a.value)
    )


def scale(a: Node, factor: float) -> Node:
    return Node.from_op(a.value * factor, Op.SCALE, (a,), lambda g: (g * factor,))


def sub(a: Node, b: Node) -> Node:
    return add(a, scale(b, -1.0))


def matmul(a: Node, b: Node) -> Node:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError("matmul", a.shape, b.shape)
    return Node.from_op(
        a.value @ b.value,
        Op.MATMUL,
        (a, b),
        lambda g: (g @ b.value.T, a.value.T @ g),
    )


def bias_add(x: Node, bias: Node) -> Node:
    """Add a per-channel vector along axis 1."""
    if bias.value.ndim != 1 or x.value.ndim < 2 or x.shape[1] != bias.shape[0]:
        raise ShapeMismatchError("bias_add", x.shape, bias.shape)
    view = (1, -1) + (1,) * (x.value.ndim - 2)
    reduce_axes = tuple(axis for axis in range(x.value.ndim) if axis != 1)
    return Node.from_op(
        x.value + bias.value.reshape(view),
        Op.BIAS_ADD,
        (x, bias),
        lambda g: (g, g.sum(axis=reduce_axes)),
    )


def concat(nodes: Sequence[Node], axis: int = 1) -> Node:
    if not nodes:
        raise InvalidShapeError("concat needs at least one node")
    first = nodes[0]
    axis = axis % first.value.ndim
    for node in nodes[1:]:
        other_axes_first = first.shape[:axis] + first.shape[axis + 1:]
        other_axes_node = node.shape[:axis] + node.shape[axis + 1:]
        if node.value.ndim != first.value.ndim or other_axes_first != other_axes_node:
            raise ShapeMismatchError("concat", first.shape, node.shape)
    sizes = [node.shape[axis] for node in nodes]
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(g: Tensor):
        return tuple(np.split(g, splits, axis=axis))

    return Node.from_op(
        np.concatenate([node.value for node in nodes], axis=axis),
        Op.CONCAT,
        tuple(nodes),
        backward_fn,
    )


def mean(x: Node) -> Node:
    count = x.value.size
    return Node.from_op(
        np.asarray(x.value.mean(), dtype=x.dtype).reshape(1),
        Op.MEAN,
        (x,),
        lambda g: (np.full(x.shape, g.reshape(()) / count, dtype=x.dtype),),
    )


def reshape(x: Node, shape: Sequence[int]) -> Node:
    return Node.from_op(
        x.value.reshape(tuple(shape)), Op.RESHAPE, (x,), lambda g: (g.reshape(x.shape),)
    )


def pad2d(x: Node, amounts: Union[int, Sequence[int]]) -> Node:
    """Zero-pad the two trailing axes by ``(top, bottom, left, right)``."""
    if isinstance(amounts, int):
        amounts = (amounts,) * 4
    top, bottom, left, right = amounts
    if min(amounts) < 0:
        raise InvalidShapeError(f"padding must be non-negative, got {list(amounts)}")
    widths = [(0, 0)] * (x.value.ndim - 2) + [(top, bottom), (left, right)]
    height, width = x.shape[-2:]

    def backward_fn(g: Tensor):
        return (g[..., top:top + height, left:left + width],)

    return Node.from_op(np.pad(x.value, widths), Op.PAD, (x,), backward_fn)


def l1(x: Node, target: Union[Node, Tensor]) -> Node:
    """Mean absolute difference."""
    target = _as_node(target)
    _same_shape("l1", x, target)
    diff = x.value - target.value
    count = diff.size

    def backward_fn(g: Tensor):
        grad = np.sign(diff) * (g.reshape(()) / count)
        return grad, -grad

    return Node.from_op(
        np.asarray(np.abs(diff).mean(), dtype=x.dtype).reshape(1),
        Op.L1,
        (x, target),
        backward_fn,
    )


def l2(x: Node, target: Union[Node, Tensor]) -> Node:
    """Mean squared difference."""
    target = _as_node(target)
    _same_shape("l2", x, target)
    diff = x.value - target.value
    count = diff.size

    def backward_fn(g: Tensor):
        grad = diff * (2.0 * g.reshape(()) / count)
        return grad, -grad

    return Node.from_op(
        np.asarray((diff * diff).mean(), dtype=x.dtype).reshape(1),
        Op.L2,
        (x, target),
        backward_fn,
    )
