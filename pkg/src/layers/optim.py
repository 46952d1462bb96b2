"""Adam with bias correction."""
from typing import Mapping

import numpy as np
from pydantic import Field

from autodiff.node import Node
from autodiff.tensor import Tensor
from base_schema import ArraySchema
from layers.exceptions import NonFiniteGradientError


class AdamState(ArraySchema):
    m: np.ndarray
    v: np.ndarray
    t: int = Field(default=0, ge=0)
    lr: float = 0.0002
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon_opt: float = 1e-8

    @classmethod
    def initial(cls, value: Tensor, **hyperparameters) -> "AdamState":
        return cls(m=np.zeros_like(value), v=np.zeros_like(value), **hyperparameters)


def adam_step(
    name: str, param: Tensor, grad: Tensor, state: AdamState
) -> tuple[Tensor, AdamState]:
    """Apply one Adam update to a single parameter.

    Args:
        name: Parameter name, used in error messages.
        param: Current value.
        grad: Gradient of the loss with respect to ``param``.
        state: Moments and step counter for ``param``.

    Returns:
        tuple[Tensor, AdamState]: Updated value and state.

    Raises:
        NonFiniteGradientError: If ``grad`` holds NaN or infinity.
    """
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError(name)
    grad = grad.astype(param.dtype, copy=False)
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    updated = param - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon_opt)
    return updated.astype(param.dtype, copy=False), state.model_copy(
        update={"m": m, "v": v, "t": t}
    )


class Adam:
    """Adam over a fixed set of named parameter nodes."""

    def __init__(
        self,
        params: Mapping[str, Node],
        lr: float = 0.0002,
        beta1: float = 0.5,
        beta2: float = 0.999,
        epsilon_opt: float = 1e-8,
    ):
        self.params = dict(params)
        self.states = {
            name: AdamState.initial(
                node.value, lr=lr, beta1=beta1, beta2=beta2, epsilon_opt=epsilon_opt
            )
            for name, node in self.params.items()
        }

    @property
    def t(self) -> int:
        return max((state.t for state in self.states.values()), default=0)

    def step(self, grads: Mapping[Node, Tensor]) -> None:
        """Update every parameter; a parameter absent from ``grads`` gets a zero gradient."""
        for name in sorted(self.params):
            node = self.params[name]
            grad = grads.get(node)
            if grad is None:
                grad = np.zeros_like(node.value)
            node.value, self.states[name] = adam_step(name, node.value, grad, self.states[name])

    def moments(self) -> dict[str, Tensor]:
        arrays = {}
        for name, state in self.states.items():
            arrays[f"m/{name}"] = state.m
            arrays[f"v/{name}"] = state.v
        return arrays

    def load_moments(self, arrays: Mapping[str, Tensor], t: int) -> None:
        for name, state in self.states.items():
            self.states[name] = state.model_copy(
                update={
                    "m": np.asarray(arrays[f"m/{name}"], dtype=state.m.dtype),
                    "v": np.asarray(arrays[f"v/{name}"], dtype=state.v.dtype),
                    "t": t,
                }
            )
