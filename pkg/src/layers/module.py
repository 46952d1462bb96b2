from typing import Iterator

import numpy as np

from autodiff.exceptions import ContractError
from autodiff.node import Node
from autodiff.tensor import Tensor


class Module:
    """Container of parameter nodes and child modules.

    Parameters are discovered from instance attributes in assignment
    order: a ``Node`` with ``requires_grad`` is a parameter, a ``Module``
    or a list of modules is a child.
    """

    def forward(self, *args, **kwargs) -> Node:
        raise NotImplementedError(f"{type(self).__name__} has no forward pass")

    def __call__(self, *args, **kwargs) -> Node:
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Node]]:
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            path = f"{prefix}{name}"
            if isinstance(value, Node) and value.requires_grad:
                yield path, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{path}.")
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{path}.{index}.")

    def parameters(self) -> dict[str, Node]:
        return dict(self.named_parameters())

    def num_parameters(self) -> int:
        return sum(node.value.size for node in self.parameters().values())

    def state_dict(self) -> dict[str, Tensor]:
        return {name: node.value.copy() for name, node in self.named_parameters()}

    def load_state_dict(self, state: dict[str, Tensor]) -> None:
        params = self.parameters()
        missing = set(params) - set(state)
        unexpected = set(state) - set(params)
        if missing or unexpected:
            raise ContractError(
                f"state mismatch: missing {sorted(missing)}, unexpected {sorted(unexpected)}"
            )
        for name, node in params.items():
            value = np.asarray(state[name])
            if value.shape != node.shape:
                raise ContractError(f"{name}: expected {list(node.shape)}, got {list(value.shape)}")
            node.value = value.astype(node.dtype, copy=True)
