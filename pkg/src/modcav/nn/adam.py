"""Adam optimizer with bias correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteError
from .tensor import Tensor


@dataclass
class AdamState:
    """Per-parameter first/second moments plus hyperparameters."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(named_params, named_grads, state: AdamState) -> AdamState:
    """One in-place Adam update over `named_params` [(name, Tensor), ...].

    `named_grads` maps name -> ndarray. Raises NonFiniteError naming the
    offending parameter group if any gradient is not finite.
    """
    for name, _ in named_params:
        g = named_grads[name]
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"adam_step: non-finite gradient for {name!r}")

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in named_params:
        g = named_grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return state


class Adam:
    """Object wrapper: reads gradients accumulated on the tensors."""

    def __init__(self, named_params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.named_params = list(named_params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self):
        for _, p in self.named_params:
            p.zero_grad()

    def step(self):
        grads = {}
        for name, p in self.named_params:
            grads[name] = p.grad if p.grad is not None else np.zeros_like(p.data)
        adam_step(self.named_params, grads, self.state)

    def set_lr(self, lr: float):
        self.state.lr = lr
