from typing import Optional

from autodiff.node import Node, parameter
from autodiff.ops import bias_add, matmul
from autodiff.tensor import TRAIN_DTYPE, RngState, randn, zeros
from layers.conv import INIT_STD
from layers.module import Module


class DenseLayer(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        rng: Optional[RngState] = None,
        dtype=TRAIN_DTYPE,
    ):
        shape = (in_features, out_features)
        self.weight = parameter(
            randn(shape, rng, dtype) * INIT_STD if rng is not None else zeros(shape, dtype)
        )
        self.bias = parameter(zeros((out_features,), dtype))

    def forward(self, x: Node) -> Node:
        return bias_add(matmul(x, self.weight), self.bias)
