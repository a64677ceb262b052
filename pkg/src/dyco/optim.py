"""Named parameter storage and the Adam update."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch

LR_GROUPS = ("triplane", "other")


class ParamStore:
    """Ordered named parameter arrays, each tagged with a learning-rate group.

    Shapes are fixed at add() time; values mutate in place during training.
    Iteration order is insertion order everywhere, which keeps updates and
    checkpoints deterministic.
    """

    def __init__(self):
        self._arrays = {}
        self._groups = {}

    def add(self, name: str, array: np.ndarray, group: str = "other") -> np.ndarray:
        if name in self._arrays:
            raise ValueError(f"duplicate parameter name {name!r}")
        if group not in LR_GROUPS:
            raise ValueError(f"unknown learning-rate group {group!r}")
        array = np.asarray(array)
        self._arrays[name] = array
        self._groups[name] = group
        return array

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def __len__(self) -> int:
        return len(self._arrays)

    def names(self):
        return list(self._arrays)

    def group(self, name: str) -> str:
        return self._groups[name]

    def items(self):
        return self._arrays.items()

    def set_values(self, name: str, array: np.ndarray) -> None:
        cur = self._arrays[name]
        array = np.asarray(array, dtype=cur.dtype)
        if array.shape != cur.shape:
            raise ShapeMismatch(f"{name}: shape {array.shape} != {cur.shape}")
        cur[...] = array

    def num_parameters(self) -> int:
        return sum(a.size for a in self._arrays.values())


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ParamStore, beta1: float = 0.9,
                   beta2: float = 0.99, eps: float = 1e-8) -> "AdamState":
        m = {n: np.zeros_like(a) for n, a in params.items()}
        v = {n: np.zeros_like(a) for n, a in params.items()}
        return cls(m=m, v=v, t=0, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: ParamStore, grads: dict, state: AdamState,
              lr_triplane: float, lr_other: float) -> None:
    """Standard bias-corrected Adam; the parameter's group picks the rate."""
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, theta in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(theta)
        g = np.asarray(g)
        if g.shape != theta.shape:
            raise ShapeMismatch(f"{name}: grad shape {g.shape} != {theta.shape}")
        lr = lr_triplane if params.group(name) == "triplane" else lr_other
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        theta -= (lr / bc1) * m / (np.sqrt(v / bc2) + state.eps)
