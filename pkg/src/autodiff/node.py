"""Graph nodes and reverse-mode differentiation."""
import sys
from typing import Callable, Optional, Sequence

import numpy as np

from autodiff.exceptions import ContractError
from autodiff.tensor import Tensor

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:
    from enum import Enum

    class StrEnum(str, Enum):
        """Python 3.10 stand-in for ``enum.StrEnum``."""

        __str__ = str.__str__
        __format__ = str.__format__

BackwardFn = Callable[[Tensor], Sequence[Optional[Tensor]]]


class Op(StrEnum):
    LEAF = "leaf"
    ADD = "add"
    MUL = "mul"
    MATMUL = "matmul"
    CONCAT = "concat"
    CONV2D = "conv2d"
    CONV_TRANSPOSE2D = "conv_transpose2d"
    INSTANCE_NORM = "instance_norm"
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"
    TANH = "tanh"
    AVG_POOL = "avg_pool"
    MEAN = "mean"
    L1 = "l1"
    L2 = "l2"
    SCALE = "scale"
    PAD = "pad"
    RESHAPE = "reshape"
    BIAS_ADD = "bias_add"


class Node:
    """A tensor value plus the operation and parents that produced it."""

    def __init__(
        self,
        value: Tensor,
        op: Op = Op.LEAF,
        parents: Sequence["Node"] = (),
        requires_grad: bool = False,
        backward_fn: Optional[BackwardFn] = None,
    ):
        self.value = np.asarray(value)
        self.op = op
        self.parents = tuple(parents)
        self.requires_grad = requires_grad
        self.grad: Optional[Tensor] = None
        self._backward_fn = backward_fn

    @classmethod
    def from_op(
        cls, value: Tensor, op: Op, parents: Sequence["Node"], backward_fn: BackwardFn
    ) -> "Node":
        requires_grad = any(parent.requires_grad for parent in parents)
        return cls(
            value,
            op=op,
            parents=parents,
            requires_grad=requires_grad,
            backward_fn=backward_fn if requires_grad else None,
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def dtype(self) -> np.dtype:
        return self.value.dtype

    def __add__(self, other: "Node") -> "Node":
        from autodiff.ops import add

        return add(self, other)

    def __sub__(self, other: "Node") -> "Node":
        from autodiff.ops import sub

        return sub(self, other)

    def __mul__(self, other: "Node") -> "Node":
        from autodiff.ops import mul

        return mul(self, other)

    def __repr__(self) -> str:
        return f"Node(op={self.op}, shape={list(self.shape)}, requires_grad={self.requires_grad})"


def constant(value: Tensor) -> Node:
    return Node(value)


def parameter(value: Tensor) -> Node:
    return Node(value, requires_grad=True)


def detach(node: Node) -> Node:
    """Return a constant leaf sharing ``node``'s value."""
    return Node(node.value)


def topological_order(root: Node) -> list[Node]:
    """Post-order of the nodes reachable from ``root`` that require grad."""
    order: list[Node] = []
    visited: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, children_done = stack.pop()
        if id(node) in visited:
            continue
        if children_done:
            visited.add(id(node))
            order.append(node)
            continue
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(root: Node) -> dict[Node, Tensor]:
    """Differentiate a scalar ``root`` with respect to every node feeding it.

    Each node's ``grad`` is overwritten with its gradient for this graph;
    contributions from fan-out are summed.

    Args:
        root: Scalar node.

    Returns:
        dict[Node, Tensor]: Gradient of ``root`` per node.

    Raises:
        ContractError: If ``root`` is not a scalar.
    """
    if root.value.size != 1:
        raise ContractError(f"backward needs a scalar root, got shape {list(root.shape)}")
    grads: dict[Node, Tensor] = {}
    if not root.requires_grad:
        return grads

    order = topological_order(root)
    grads[root] = np.ones_like(root.value)
    for node in reversed(order):
        upstream = grads.get(node)
        if upstream is None or node._backward_fn is None:
            continue
        for parent, grad in zip(node.parents, node._backward_fn(upstream)):
            if grad is None or not parent.requires_grad:
                continue
            if parent in grads:
                grads[parent] = grads[parent] + grad
            else:
                grads[parent] = grad

    for node in order:
        node.grad = grads.get(node, np.zeros_like(node.value))
    return grads
