from typing import Callable

import numpy as np

from autodiff.exceptions import ContractError, NonFiniteError
from autodiff.node import Node, backward, constant, parameter
from autodiff.tensor import CHECK_DTYPE, Tensor

ScalarFn = Callable[[Node], Node]


def _evaluate(f: ScalarFn, x: Tensor) -> float:
    out = f(constant(x))
    if out.value.size != 1:
        raise ContractError(f"function must be scalar-valued, got shape {list(out.shape)}")
    value = float(out.value.reshape(()))
    if not np.isfinite(value):
        raise NonFiniteError(f"f evaluated to {value}")
    return value


def numeric_gradient(f: ScalarFn, x: Tensor, eps: float = 1e-4) -> Tensor:
    """Central finite differences of ``f`` at ``x``."""
    x = np.array(x, dtype=CHECK_DTYPE)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    grad_flat = grad.reshape(-1)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + eps
        upper = _evaluate(f, x)
        flat[index] = original - eps
        lower = _evaluate(f, x)
        flat[index] = original
        grad_flat[index] = (upper - lower) / (2 * eps)
    return grad


def analytic_gradient(f: ScalarFn, x: Tensor) -> Tensor:
    node = parameter(np.array(x, dtype=CHECK_DTYPE))
    out = f(node)
    if not np.all(np.isfinite(out.value)):
        raise NonFiniteError(f"f evaluated to {out.value.reshape(-1).tolist()}")
    backward(out)
    return node.grad if node.grad is not None else np.zeros_like(node.value)


def finite_diff_check(f: ScalarFn, x: Tensor, eps: float = 1e-4) -> float:
    """Compare reverse-mode and finite-difference gradients of ``f`` at ``x``.

    Evaluation happens at the verification precision.

    Args:
        f: Scalar-valued function of one node.
        x: Point of evaluation.
        eps: Finite-difference step.

    Returns:
        float: max |analytic - numeric| / max(|numeric|, 1e-8) over elements.

    Raises:
        NonFiniteError: If f is not finite at x.
    """
    analytic = analytic_gradient(f, x)
    numeric = numeric_gradient(f, x, eps)
    denominator = np.maximum(np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denominator))
