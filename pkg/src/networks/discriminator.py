"""Discriminator in the super-resolution GAN layout.

Instance norm stands in for batch norm, since training runs at batch
size 1. The score head is linear for the least-squares loss.
"""
from typing import Optional

from autodiff.exceptions import ShapeMismatchError
from autodiff.node import Node, constant
from autodiff.ops import reshape
from autodiff.tensor import TRAIN_DTYPE, RngState, Tensor
from layers.activations import leaky_relu
from layers.conv import Conv2dLayer
from layers.dense import DenseLayer
from layers.module import Module
from layers.norm import InstanceNormLayer
from networks.schemas import DiscriminatorSpec


class DiscriminatorBlock(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int,
        normalize: bool,
        rng: RngState,
        dtype=TRAIN_DTYPE,
    ):
        self.conv = Conv2dLayer(in_channels, out_channels, 3, stride, 1, rng=rng, dtype=dtype)
        self.norm: Optional[InstanceNormLayer] = (
            InstanceNormLayer(out_channels, dtype=dtype) if normalize else None
        )

    def forward(self, x: Node) -> Node:
        x = self.conv(x)
        if self.norm is not None:
            x = self.norm(x)
        return leaky_relu(x)


class Discriminator(Module):
    def __init__(self, spec: DiscriminatorSpec, rng: RngState, dtype=TRAIN_DTYPE):
        self._spec = spec
        self._dtype = dtype
        channels = (spec.in_channels,) + spec.widths
        self.blocks = [
            DiscriminatorBlock(
                channels[index], channels[index + 1], stride, index > 0, rng, dtype
            )
            for index, stride in enumerate(spec.strides)
        ]
        flat = spec.widths[-1] * spec.final_size**2
        self.dense = DenseLayer(flat, spec.dense_width, rng=rng, dtype=dtype)
        self.score = DenseLayer(spec.dense_width, 1, rng=rng, dtype=dtype)

    @property
    def spec(self) -> DiscriminatorSpec:
        return self._spec

    @property
    def dtype(self):
        return self._dtype

    def forward(self, image: Node) -> Node:
        expected = (self._spec.in_channels, self._spec.image_size, self._spec.image_size)
        if image.value.ndim != 4 or image.shape[1:] != expected:
            raise ShapeMismatchError("discriminator", image.shape, (-1,) + expected)
        x = image
        for block in self.blocks:
            x = block(x)
        x = reshape(x, (x.shape[0], -1))
        return self.score(leaky_relu(self.dense(x)))


def build_discriminator(
    spec: DiscriminatorSpec, rng: RngState, dtype=TRAIN_DTYPE
) -> Discriminator:
    return Discriminator(spec, rng, dtype)


def discriminator_forward(discriminator: Discriminator, image: Tensor) -> Tensor:
    return discriminator(constant(image.astype(discriminator.dtype, copy=False))).value
