"""Least-squares adversarial terms and the L1 identity term.

The discriminator minimises ``discriminator_loss``; the generator
minimises ``total_generator_loss`` (GAN term plus identity term).
Every expectation is a mean.
"""
import numpy as np

from autodiff.exceptions import ShapeMismatchError
from autodiff.node import Node
from autodiff.ops import add, l1, l2, scale
from losses.schemas import LossConfig


def _labels(like: Node, value: float) -> np.ndarray:
    return np.full(like.shape, value, dtype=like.dtype)


def discriminator_loss(d_real: Node, d_fake: Node, cfg: LossConfig) -> Node:
    if d_real.shape != d_fake.shape:
        raise ShapeMismatchError("discriminator_loss", d_real.shape, d_fake.shape)
    real_term = scale(l2(d_real, _labels(d_real, cfg.real_label)), cfg.lambda1)
    fake_term = scale(l2(d_fake, _labels(d_fake, cfg.fake_label)), cfg.lambda2)
    return add(real_term, fake_term)


def generator_gan_loss(d_fake: Node, cfg: LossConfig) -> Node:
    return scale(l2(d_fake, _labels(d_fake, cfg.real_label)), cfg.lambda3)


def identity_loss(generated: Node, target: Node, cfg: LossConfig) -> Node:
    return scale(l1(generated, target), cfg.lambda4)


def total_generator_loss(gan: Node, identity: Node) -> Node:
    return add(gan, identity)
