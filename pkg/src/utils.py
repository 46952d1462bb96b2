import logging
import sys
from typing import Callable

import numpy as np
from pydantic import BaseModel

from autodiff.gradcheck import finite_diff_check
from autodiff.node import Node, constant
from autodiff.ops import mean, mul, scale
from autodiff.tensor import CHECK_DTYPE, RngState
from consts import STAGE_CONDITION_CHANNELS
from layers.activations import leaky_relu, relu
from layers.conv import conv2d_op, conv_transpose2d_op
from layers.norm import instance_norm_op
from layers.pooling import avg_pool2d
from losses.losses import discriminator_loss, generator_gan_loss, identity_loss
from losses.schemas import LossConfig
from metrics.ssim import ssim
from networks.generator import build_generator
from networks.schemas import COARSE_SKIP_RESOLUTIONS, GeneratorSpec
from training.buffer import ImageBuffer

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:
    from enum import Enum

    class StrEnum(str, Enum):
        """Python 3.10 stand-in for ``enum.StrEnum``."""

        __str__ = str.__str__
        __format__ = str.__format__

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-5
GRADIENT_EPS = 1e-5
SELF_CHECK_SEED = 2024
AUDIT_IMAGE_SIZE = 32
AUDIT_BASE_WIDTH = 2
BUFFER_CALLS = 10_000
BUFFER_CAPACITY = 50
BUFFER_REPLAY_RANGE = (0.45, 0.55)

ScalarFn = Callable[[Node], Node]


class SelfCheckStatus(StrEnum):
    """Self check status."""

    OK = "ok"
    FAIL = "fail"


class SelfCheckResponse(BaseModel):
    checks: dict[str, SelfCheckStatus]

    @property
    def passed(self) -> bool:
        return all(status == SelfCheckStatus.OK for status in self.checks.values())


def _status(ok: bool) -> SelfCheckStatus:
    return SelfCheckStatus.OK if ok else SelfCheckStatus.FAIL


def _project(output: Node, weights: np.ndarray) -> Node:
    """Scalar ``sum(output * weights)``."""
    return scale(mean(mul(output, constant(weights))), float(output.value.size))


def _away_from_zero(values: np.ndarray) -> np.ndarray:
    return values + np.sign(values) * 0.1


def gradient_cases(rng: RngState) -> dict[str, tuple[ScalarFn, np.ndarray]]:
    """Scalar test functions and evaluation points, one per differentiable op."""
    weight = constant(rng.normal((3, 2, 3, 3)))
    bias = constant(rng.normal((3,)))
    up_weight = constant(rng.normal((2, 3, 4, 4)))
    up_bias = constant(rng.normal((3,)))
    gamma = constant(rng.normal((2,)))
    beta = constant(rng.normal((2,)))
    down = rng.normal((1, 3, 3, 3))
    up = rng.normal((1, 3, 8, 8))
    planes = rng.normal((1, 2, 4, 4))
    pooled = rng.normal((1, 2, 2, 2))
    loss_config = LossConfig()
    target = constant(rng.normal((1, 3, 4, 4)))
    fake_scores = constant(rng.normal((1, 1)))

    return {
        "conv2d": (
            lambda x: _project(conv2d_op(x, weight, bias, stride=2, padding=1), down),
            rng.normal((1, 2, 5, 5)),
        ),
        "conv_transpose2d": (
            lambda x: _project(conv_transpose2d_op(x, up_weight, up_bias, stride=2, padding=1), up),
            rng.normal((1, 2, 4, 4)),
        ),
        "instance_norm": (
            lambda x: _project(instance_norm_op(x, gamma, beta), planes),
            rng.normal((1, 2, 4, 4)),
        ),
        "relu": (lambda x: _project(relu(x), planes), _away_from_zero(rng.normal((1, 2, 4, 4)))),
        "leaky_relu": (
            lambda x: _project(leaky_relu(x), planes),
            _away_from_zero(rng.normal((1, 2, 4, 4))),
        ),
        "avg_pool": (lambda x: _project(avg_pool2d(x, 2), pooled), rng.normal((1, 2, 4, 4))),
        "discriminator_loss": (
            lambda x: discriminator_loss(x, fake_scores, loss_config),
            rng.normal((1, 1)),
        ),
        "generator_gan_loss": (lambda x: generator_gan_loss(x, loss_config), rng.normal((1, 1))),
        "identity_loss": (
            lambda x: identity_loss(x, target, loss_config),
            target.value + _away_from_zero(rng.normal((1, 3, 4, 4))),
        ),
    }


def get_self_check_status_for_gradients() -> dict[str, SelfCheckStatus]:
    """Finite-difference check of every layer op and loss at verification precision.

    Returns:
        dict[str, SelfCheckStatus]: Status per op.
    """
    statuses = {}
    for name, (f, x) in gradient_cases(RngState(SELF_CHECK_SEED)).items():
        try:
            error = finite_diff_check(f, x.astype(CHECK_DTYPE), GRADIENT_EPS)
            logger.debug(f"Gradient check {name}: relative error {error:.3e}")
            statuses[f"gradient:{name}"] = _status(error < GRADIENT_TOLERANCE)
        except Exception as error:  # pragma: no cover
            logger.debug(f"Gradient check {name} failed with error: {error}")
            statuses[f"gradient:{name}"] = SelfCheckStatus.FAIL
    return statuses


def get_self_check_status_for_structure() -> SelfCheckStatus:
    """Audit a narrow 32x32 Stage-2 generator's injections, skips and output."""
    try:
        channels = sum(STAGE_CONDITION_CHANNELS[2])
        spec = GeneratorSpec.for_image_size(AUDIT_IMAGE_SIZE, channels, base_width=AUDIT_BASE_WIDTH)
        generator = build_generator(spec, RngState(SELF_CHECK_SEED))
        audit = generator.audit()
        stack = RngState(SELF_CHECK_SEED, (1,)).uniform(
            -1.0, 1.0, (1, channels, AUDIT_IMAGE_SIZE, AUDIT_IMAGE_SIZE)
        )
        output = generator(constant(stack.astype(np.float32))).value
        return _status(
            audit.condition_injections == audit.encoder_stages
            and audit.skip_resolutions == tuple(sorted(set(COARSE_SKIP_RESOLUTIONS) & set(spec.resolutions)))
            and output.shape == (1, 3, AUDIT_IMAGE_SIZE, AUDIT_IMAGE_SIZE)
            and float(np.abs(output).max()) <= 1.0
        )
    except Exception as error:  # pragma: no cover
        logger.debug(f"Structure check failed with error: {error}")
        return SelfCheckStatus.FAIL


def get_self_check_status_for_losses() -> SelfCheckStatus:
    """Zero points of the adversarial and identity terms."""
    try:
        config = LossConfig()
        ones = constant(np.ones((1, 1)))
        zeros = constant(np.zeros((1, 1)))
        image = constant(RngState(SELF_CHECK_SEED).normal((1, 3, 4, 4)))
        return _status(
            float(discriminator_loss(ones, zeros, config).value[0]) == 0.0
            and float(generator_gan_loss(ones, config).value[0]) == 0.0
            and float(identity_loss(image, image, config).value[0]) == 0.0
        )
    except Exception as error:  # pragma: no cover
        logger.debug(f"Loss check failed with error: {error}")
        return SelfCheckStatus.FAIL


def get_self_check_status_for_ssim() -> SelfCheckStatus:
    """Identity, the constant-image closed form and symmetry."""
    try:
        rng = RngState(SELF_CHECK_SEED)
        a = rng.uniform(0.0, 1.0, (3, 16, 16))
        b = rng.uniform(0.0, 1.0, (3, 16, 16))
        c1 = 0.01**2
        constant_score = ssim(np.zeros((3, 16, 16)), np.ones((3, 16, 16)))
        return _status(
            abs(ssim(a, a) - 1.0) <= 1e-9
            and abs(constant_score - c1 / (1.0 + c1)) <= 1e-8
            and ssim(a, b) == ssim(b, a)
        )
    except Exception as error:  # pragma: no cover
        logger.debug(f"SSIM check failed with error: {error}")
        return SelfCheckStatus.FAIL


def get_self_check_status_for_buffer() -> SelfCheckStatus:
    """Replay fraction after warm-up and the capacity bound."""
    try:
        buffer = ImageBuffer(BUFFER_CAPACITY, RngState(SELF_CHECK_SEED))
        replayed = 0
        within_capacity = True
        for index in range(BUFFER_CALLS):
            incoming = np.full((1,), float(index))
            returned = buffer.query(incoming)
            within_capacity = within_capacity and len(buffer) <= BUFFER_CAPACITY
            if index >= BUFFER_CAPACITY and returned is not incoming:
                replayed += 1
        fraction = replayed / (BUFFER_CALLS - BUFFER_CAPACITY)
        low, high = BUFFER_REPLAY_RANGE
        return _status(within_capacity and low <= fraction <= high)
    except Exception as error:  # pragma: no cover
        logger.debug(f"Buffer check failed with error: {error}")
        return SelfCheckStatus.FAIL


def run_self_check() -> SelfCheckResponse:
    checks = get_self_check_status_for_gradients()
    checks["structure"] = get_self_check_status_for_structure()
    checks["losses"] = get_self_check_status_for_losses()
    checks["ssim"] = get_self_check_status_for_ssim()
    checks["buffer"] = get_self_check_status_for_buffer()
    return SelfCheckResponse(checks=checks)
