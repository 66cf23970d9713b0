"""Gradient verification against central finite differences.

The checker perturbs every parameter element and every input element one at
a time, so it is only meant for small nets (<= 10^4 parameters).
"""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteError
from . import layers
from .tensor import Tensor

MAX_PARAMS = 10_000


def relative_error(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a), abs(n), 1.0)


def grad_check_fn(loss_fn, tensors, epsilon: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences.

    `loss_fn()` must return a scalar Tensor computed from `tensors`, a list of
    Tensors with requires_grad=True. The closure is re-evaluated after each
    perturbation, so it must be pure.
    """
    if not (1e-7 <= epsilon <= 1e-3):
        raise ValueError(f"epsilon {epsilon} outside [1e-7, 1e-3]")
    n_elems = sum(t.size for t in tensors)
    if n_elems > MAX_PARAMS:
        raise ValueError(f"{n_elems} elements exceeds gradient-check budget {MAX_PARAMS}")

    for t in tensors:
        t.zero_grad()
    loss = loss_fn()
    if loss.size != 1:
        raise ValueError("loss_fn must return a scalar")
    if not np.isfinite(loss.data).all():
        raise NonFiniteError("grad_check: non-finite loss")
    loss.backward()
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data)
                for t in tensors]

    worst = 0.0
    for t, a in zip(tensors, analytic):
        flat = t.data.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = float(loss_fn().data)
            flat[i] = orig - epsilon
            f_minus = float(loss_fn().data)
            flat[i] = orig
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NonFiniteError("grad_check: non-finite loss during perturbation")
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            worst = max(worst, relative_error(a_flat[i], numeric))
    return worst


def grad_check(net, x, epsilon: float = 1e-5, rng=None) -> float:
    """Check a layer stack end to end.

    The scalar objective is a fixed random projection of the output,
    0.5 * sum((net(x) * r)^2), which exercises every output element.
    """
    x_t = Tensor(np.asarray(x, dtype=float), requires_grad=True)
    out0 = layers.net_forward(net, x_t)
    if rng is None:
        r = np.ones_like(out0.data)
    else:
        r = rng.normal(size=out0.shape)
    proj = Tensor(r)

    def loss_fn():
        y = layers.net_forward(net, x_t) * proj
        return (y * y).sum() * 0.5

    tensors = [x_t] + [p for _, p in layers.net_params(net, "net")]
    return grad_check_fn(loss_fn, tensors, epsilon)
