"""2-D convolution and transposed convolution.

Convolution is cross-correlation over sliding windows; the transposed
convolution is its adjoint with respect to the input, so both share the
same three kernels below.
"""
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from autodiff.exceptions import InvalidShapeError, ShapeMismatchError
from autodiff.node import Node, Op, parameter
from autodiff.tensor import TRAIN_DTYPE, RngState, Tensor, randn, zeros
from layers.module import Module

INIT_STD = 0.02


def conv_output_size(size: int, kernel_size: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel_size) // stride + 1


def conv_transpose_output_size(size: int, kernel_size: int, stride: int, padding: int) -> int:
    return (size - 1) * stride - 2 * padding + kernel_size


def _windows(x: Tensor, kernel_size: int, stride: int, padding: int) -> Tensor:
    padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(padded, (kernel_size, kernel_size), axis=(2, 3))
    return windows[:, :, ::stride, ::stride]


def _correlate(x: Tensor, weight: Tensor, stride: int, padding: int) -> Tensor:
    windows = _windows(x, weight.shape[-1], stride, padding)
    out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def _correlate_adjoint(
    g: Tensor, weight: Tensor, size: tuple[int, int], stride: int, padding: int
) -> Tensor:
    batch, _, out_h, out_w = g.shape
    kernel_size = weight.shape[-1]
    height, width = size
    canvas = np.zeros(
        (batch, weight.shape[1], height + 2 * padding, width + 2 * padding),
        dtype=np.result_type(g, weight),
    )
    for i in range(kernel_size):
        for j in range(kernel_size):
            contribution = np.tensordot(g, weight[:, :, i, j], axes=([1], [0]))
            canvas[
                :, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride
            ] += contribution.transpose(0, 3, 1, 2)
    return canvas[:, :, padding:padding + height, padding:padding + width]


def _correlate_weight_grad(
    g: Tensor, x: Tensor, kernel_size: int, stride: int, padding: int
) -> Tensor:
    windows = _windows(x, kernel_size, stride, padding)
    out_h, out_w = g.shape[-2:]
    windows = windows[:, :, :out_h, :out_w]
    return np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))


def _bias_view(bias: Tensor) -> Tensor:
    return bias.reshape(1, -1, 1, 1)


def conv2d_op(x: Node, weight: Node, bias: Node, stride: int = 1, padding: int = 0) -> Node:
    """Cross-correlate ``x`` (B x C x H x W) with ``weight`` (O x C x k x k)."""
    if x.value.ndim != 4 or weight.value.ndim != 4 or x.shape[1] != weight.shape[1]:
        raise ShapeMismatchError("conv2d", x.shape, weight.shape)
    kernel_size = weight.shape[-1]
    if min(x.shape[2:]) + 2 * padding < kernel_size:
        raise InvalidShapeError(
            f"conv2d input {list(x.shape)} with padding {padding} is smaller than kernel {kernel_size}"
        )
    value = _correlate(x.value, weight.value, stride, padding) + _bias_view(bias.value)

    def backward_fn(g: Tensor):
        return (
            _correlate_adjoint(g, weight.value, x.shape[2:], stride, padding),
            _correlate_weight_grad(g, x.value, kernel_size, stride, padding),
            g.sum(axis=(0, 2, 3)),
        )

    return Node.from_op(value, Op.CONV2D, (x, weight, bias), backward_fn)


def conv_transpose2d_op(
    x: Node, weight: Node, bias: Node, stride: int = 1, padding: int = 0
) -> Node:
    """Transposed convolution of ``x`` (B x I x H x W) with ``weight`` (I x O x k x k)."""
    if x.value.ndim != 4 or weight.value.ndim != 4 or x.shape[1] != weight.shape[0]:
        raise ShapeMismatchError("conv_transpose2d", x.shape, weight.shape)
    kernel_size = weight.shape[-1]
    size = tuple(
        conv_transpose_output_size(extent, kernel_size, stride, padding)
        for extent in x.shape[2:]
    )
    if min(size) < 1:
        raise InvalidShapeError(f"conv_transpose2d output extent {list(size)} is empty")
    value = _correlate_adjoint(x.value, weight.value, size, stride, padding)
    value = value + _bias_view(bias.value)

    def backward_fn(g: Tensor):
        return (
            _correlate(g, weight.value, stride, padding),
            _correlate_weight_grad(x.value, g, kernel_size, stride, padding),
            g.sum(axis=(0, 2, 3)),
        )

    return Node.from_op(value, Op.CONV_TRANSPOSE2D, (x, weight, bias), backward_fn)


class Conv2dLayer(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0,
        rng: Optional[RngState] = None,
        dtype=TRAIN_DTYPE,
    ):
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        self.weight = parameter(
            randn(shape, rng, dtype) * INIT_STD if rng is not None else zeros(shape, dtype)
        )
        self.bias = parameter(zeros((out_channels,), dtype))
        self.stride = stride
        self.padding = padding

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.weight.shape[-1]

    def forward(self, x: Node) -> Node:
        return conv2d(x, self)


class ConvTranspose2dLayer(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0,
        rng: Optional[RngState] = None,
        dtype=TRAIN_DTYPE,
    ):
        shape = (in_channels, out_channels, kernel_size, kernel_size)
        self.weight = parameter(
            randn(shape, rng, dtype) * INIT_STD if rng is not None else zeros(shape, dtype)
        )
        self.bias = parameter(zeros((out_channels,), dtype))
        self.stride = stride
        self.padding = padding

    @property
    def in_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[1]

    def forward(self, x: Node) -> Node:
        return conv_transpose2d(x, self)


def conv2d(x: Node, layer: Conv2dLayer) -> Node:
    return conv2d_op(x, layer.weight, layer.bias, layer.stride, layer.padding)


def conv_transpose2d(x: Node, layer: ConvTranspose2dLayer) -> Node:
    return conv_transpose2d_op(x, layer.weight, layer.bias, layer.stride, layer.padding)
