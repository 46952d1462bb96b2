"""Encoder-decoder generator with per-stage condition injection.

Every encoder stage runs a residual block on the running features, feeds
the condition stack (average-pooled to the stage resolution) through its
own three-conv module, and fuses both with two conv + instance-norm
layers. Encoder features at the coarse resolutions are concatenated onto
the decoder stage of the same resolution.
"""
import logging
from typing import Optional, Union

import numpy as np

from autodiff.exceptions import ShapeMismatchError
from autodiff.node import Node, constant
from autodiff.ops import add, concat
from autodiff.tensor import TRAIN_DTYPE, RngState, Tensor
from layers.activations import relu, tanh
from layers.conv import Conv2dLayer, ConvTranspose2dLayer
from layers.module import Module
from layers.norm import InstanceNormLayer
from layers.pooling import avg_pool2d
from networks.exceptions import GeneratorSpecError
from networks.schemas import COARSE_SKIP_RESOLUTIONS, ConditionSet, GeneratorSpec, GraphAudit

logger = logging.getLogger(__name__)


class ResnetBlock(Module):
    def __init__(self, channels: int, rng: RngState, dtype=TRAIN_DTYPE):
        self.conv1 = Conv2dLayer(channels, channels, 3, 1, 1, rng=rng, dtype=dtype)
        self.norm1 = InstanceNormLayer(channels, dtype=dtype)
        self.conv2 = Conv2dLayer(channels, channels, 3, 1, 1, rng=rng, dtype=dtype)
        self.norm2 = InstanceNormLayer(channels, dtype=dtype)

    def forward(self, x: Node) -> Node:
        h = relu(self.norm1(self.conv1(x)))
        return add(x, self.norm2(self.conv2(h)))


class ConditionConvModule(Module):
    """Three 3x3 convolutions, each followed by ReLU."""

    def __init__(self, in_channels: int, out_channels: int, rng: RngState, dtype=TRAIN_DTYPE):
        self.convs = [
            Conv2dLayer(in_channels, out_channels, 3, 1, 1, rng=rng, dtype=dtype),
            Conv2dLayer(out_channels, out_channels, 3, 1, 1, rng=rng, dtype=dtype),
            Conv2dLayer(out_channels, out_channels, 3, 1, 1, rng=rng, dtype=dtype),
        ]

    def forward(self, x: Node) -> Node:
        for conv in self.convs:
            x = relu(conv(x))
        return x


class ConvNormModule(Module):
    """Two 3x3 convolutions, each followed by instance norm and ReLU."""

    def __init__(self, in_channels: int, out_channels: int, rng: RngState, dtype=TRAIN_DTYPE):
        self.conv1 = Conv2dLayer(in_channels, out_channels, 3, 1, 1, rng=rng, dtype=dtype)
        self.norm1 = InstanceNormLayer(out_channels, dtype=dtype)
        self.conv2 = Conv2dLayer(out_channels, out_channels, 3, 1, 1, rng=rng, dtype=dtype)
        self.norm2 = InstanceNormLayer(out_channels, dtype=dtype)

    @property
    def in_channels(self) -> int:
        return self.conv1.in_channels

    def forward(self, x: Node) -> Node:
        x = relu(self.norm1(self.conv1(x)))
        return relu(self.norm2(self.conv2(x)))


class EncoderStage(Module):
    def __init__(
        self,
        resolution: int,
        width: int,
        next_width: Optional[int],
        condition_channels: Optional[int],
        rng: RngState,
        dtype=TRAIN_DTYPE,
    ):
        self.resolution = resolution
        self.resnet = ResnetBlock(width, rng, dtype)
        self.condition_module = (
            ConditionConvModule(condition_channels, width, rng, dtype)
            if condition_channels
            else None
        )
        fusion_width = 2 * width if self.condition_module is not None else width
        self.fusion = ConvNormModule(fusion_width, width, rng, dtype)
        self.down = (
            Conv2dLayer(width, next_width, 4, 2, 1, rng=rng, dtype=dtype) if next_width else None
        )
        self.down_norm = InstanceNormLayer(next_width, dtype=dtype) if next_width else None

    def forward(self, h: Node, conditions: Node) -> tuple[Node, Optional[Node]]:
        features = self.resnet(h)
        if self.condition_module is not None:
            pooled = avg_pool2d(conditions, conditions.shape[-1] // self.resolution)
            features = concat([features, self.condition_module(pooled)], axis=1)
        features = self.fusion(features)
        if self.down is None:
            return features, None
        return features, relu(self.down_norm(self.down(features)))


class DecoderStage(Module):
    def __init__(
        self,
        resolution: int,
        width: int,
        next_width: Optional[int],
        with_skip: bool,
        rng: RngState,
        dtype=TRAIN_DTYPE,
    ):
        self.resolution = resolution
        self.resnet = ResnetBlock(width, rng, dtype)
        self.skip_fusion = (
            Conv2dLayer(2 * width, width, 1, rng=rng, dtype=dtype) if with_skip else None
        )
        self.up = (
            ConvTranspose2dLayer(width, next_width, 4, 2, 1, rng=rng, dtype=dtype)
            if next_width
            else None
        )
        self.up_norm = InstanceNormLayer(next_width, dtype=dtype) if next_width else None

    def forward(self, h: Node, skip: Optional[Node]) -> Node:
        h = self.resnet(h)
        if self.skip_fusion is not None:
            h = self.skip_fusion(concat([h, skip], axis=1))
        if self.up is None:
            return h
        return relu(self.up_norm(self.up(h)))


class Generator(Module):
    def __init__(self, spec: GeneratorSpec, rng: RngState, dtype=TRAIN_DTYPE):
        self._spec = spec
        self._dtype = dtype
        widths = spec.widths
        resolutions = spec.resolutions
        last = len(resolutions) - 1

        self.stem = Conv2dLayer(spec.input_channels, widths[0], 3, 1, 1, rng=rng, dtype=dtype)
        self.stem_norm = InstanceNormLayer(widths[0], dtype=dtype)
        self.encoder = [
            EncoderStage(
                resolution=resolutions[stage],
                width=widths[stage],
                next_width=widths[stage + 1] if stage < last else None,
                condition_channels=(
                    spec.condition_channels
                    if spec.condition_injection == "all" or stage == 0
                    else None
                ),
                rng=rng,
                dtype=dtype,
            )
            for stage in range(len(resolutions))
        ]
        self.decoder = [
            DecoderStage(
                resolution=resolutions[stage],
                width=widths[stage],
                next_width=widths[stage - 1] if stage > 0 else None,
                with_skip=resolutions[stage] in spec.skip_resolutions,
                rng=rng,
                dtype=dtype,
            )
            for stage in reversed(range(len(resolutions)))
        ]
        self.head = Conv2dLayer(widths[0], spec.output_channels, 3, 1, 1, rng=rng, dtype=dtype)

    @property
    def spec(self) -> GeneratorSpec:
        return self._spec

    @property
    def dtype(self):
        return self._dtype

    def forward(self, conditions: Union[ConditionSet, Node]) -> Node:
        stack = conditions
        if isinstance(conditions, ConditionSet):
            stack = constant(conditions.stack().astype(self._dtype, copy=False))
        expected = (self._spec.condition_channels, self._spec.image_size, self._spec.image_size)
        if stack.value.ndim != 4 or stack.shape[1:] != expected:
            raise ShapeMismatchError("generator", stack.shape, (-1,) + expected)

        h = relu(self.stem_norm(self.stem(stack)))
        skips: dict[int, Node] = {}
        for stage in self.encoder:
            features, h = stage(h, stack)
            if stage.resolution in self._spec.skip_resolutions:
                skips[stage.resolution] = features
        h = features
        for stage in self.decoder:
            h = stage(h, skips.get(stage.resolution))
        return tanh(self.head(h))

    def audit(self) -> GraphAudit:
        """Count condition injections and skip edges from the built structure."""
        return GraphAudit(
            encoder_stages=len(self.encoder),
            condition_injections=sum(
                1 for stage in self.encoder if stage.condition_module is not None
            ),
            skip_resolutions=tuple(
                sorted(stage.resolution for stage in self.decoder if stage.skip_fusion is not None)
            ),
            encoder_widths=tuple(stage.resnet.conv1.out_channels for stage in self.encoder),
            fusion_input_widths=tuple(stage.fusion.in_channels for stage in self.encoder),
        )


def build_generator(spec: GeneratorSpec, rng: RngState, dtype=TRAIN_DTYPE) -> Generator:
    """Build and initialise a generator.

    Raises:
        GeneratorSpecError: If a skip connection is requested above 16x16.
    """
    too_fine = [resolution for resolution in spec.skip_resolutions if resolution > max(COARSE_SKIP_RESOLUTIONS)]
    if too_fine:
        raise GeneratorSpecError(f"skips above 16x16 rejected, got {too_fine}")
    generator = Generator(spec, rng, dtype)
    logger.debug(
        f"Built generator: widths={spec.widths}, skips={spec.skip_resolutions}, "
        f"parameters={generator.num_parameters()}"
    )
    return generator


def generator_forward(generator: Generator, conditions: ConditionSet) -> Tensor:
    return generator(conditions).value
