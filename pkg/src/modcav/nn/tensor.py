"""Reverse-mode autodiff over numpy arrays.

Deliberately small: only the operations needed by the fixed architectures in
this package (dense stacks, causal temporal convolutions, transposed-conv
expansion heads, blending, pooled losses). Not a general-purpose autodiff.

All math runs in float64 by default; float32 can be selected globally via
:func:`set_default_dtype` at a cost in gradient-check tolerances.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from ..errors import NonFiniteError, ShapeError

_DEFAULT_DTYPE = np.float64


def set_default_dtype(dtype) -> None:
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ValueError(f"unsupported dtype {dtype}")
    _DEFAULT_DTYPE = dtype.type


def default_dtype():
    return _DEFAULT_DTYPE


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape` (adjoint of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """An n-d array node in a reverse-mode computation tape.

    Gradient bookkeeping (parent links and backward closures) is attached only
    when some input requires gradients, so forward-only evaluation builds no
    graph and holds no extra references.
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=_DEFAULT_DTYPE)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._backward: Callable[[], None] = _noop
        self._parents: tuple = ()
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        nm = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}{nm})"

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def assert_finite(self, context: str = "tensor"):
        if not np.all(np.isfinite(self.data)):
            raise NonFiniteError(f"{context}: non-finite values encountered")
        return self

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, grad=None):
        """Backpropagate from this node. Scalar outputs seed with 1."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without grad requires a scalar output")
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=self.data.dtype)
            if seed.shape != self.data.shape:
                raise ShapeError("backward seed", self.data.shape, seed.shape)

        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))

        self._accumulate(seed)
        for node in reversed(topo):
            node._backward()

    # -- construction helpers --------------------------------------------

    @staticmethod
    def _wrap(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    @staticmethod
    def _node(data, parents, make_backward) -> "Tensor":
        """Build a result node; attach tape links only when grads are needed."""
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = make_backward(out)
        return out

    # -- elementwise arithmetic --------------------------------------------

    def __add__(self, other):
        a, b = self, Tensor._wrap(other)

        def mk(out):
            def bw():
                if a.requires_grad:
                    a._accumulate(_unbroadcast(out.grad, a.data.shape))
                if b.requires_grad:
                    b._accumulate(_unbroadcast(out.grad, b.data.shape))
            return bw

        return Tensor._node(a.data + b.data, (a, b), mk)

    __radd__ = __add__

    def __neg__(self):
        a = self

        def mk(out):
            def bw():
                a._accumulate(-out.grad)
            return bw

        return Tensor._node(-a.data, (a,), mk)

    def __sub__(self, other):
        return self + (-Tensor._wrap(other))

    def __rsub__(self, other):
        return Tensor._wrap(other) + (-self)

    def __mul__(self, other):
        a, b = self, Tensor._wrap(other)

        def mk(out):
            def bw():
                if a.requires_grad:
                    a._accumulate(_unbroadcast(out.grad * b.data, a.data.shape))
                if b.requires_grad:
                    b._accumulate(_unbroadcast(out.grad * a.data, b.data.shape))
            return bw

        return Tensor._node(a.data * b.data, (a, b), mk)

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = self, Tensor._wrap(other)

        def mk(out):
            def bw():
                if a.requires_grad:
                    a._accumulate(_unbroadcast(out.grad / b.data, a.data.shape))
                if b.requires_grad:
                    g = -out.grad * a.data / (b.data * b.data)
                    b._accumulate(_unbroadcast(g, b.data.shape))
            return bw

        return Tensor._node(a.data / b.data, (a, b), mk)

    def __rtruediv__(self, other):
        return Tensor._wrap(other) / self

    def square(self):
        return self * self

    # -- matrix product --------------------------------------------------

    def matmul(self, other: "Tensor") -> "Tensor":
        a, b = self, Tensor._wrap(other)
        if a.data.ndim != 2 or b.data.ndim != 2:
            raise ShapeError("matmul operands must be 2-d", (2, 2), (a.data.ndim, b.data.ndim))
        if a.data.shape[1] != b.data.shape[0]:
            raise ShapeError("matmul inner dims", (a.data.shape[1],), (b.data.shape[0],))

        def mk(out):
            def bw():
                if a.requires_grad:
                    a._accumulate(out.grad @ b.data.T)
                if b.requires_grad:
                    b._accumulate(a.data.T @ out.grad)
            return bw

        return Tensor._node(a.data @ b.data, (a, b), mk)

    def __matmul__(self, other):
        return self.matmul(other)

    # -- nonlinearities --------------------------------------------------

    def relu(self):
        a = self

        def mk(out):
            def bw():
                a._accumulate(out.grad * (a.data > 0))
            return bw

        return Tensor._node(np.maximum(a.data, 0.0), (a,), mk)

    def leaky_relu(self, slope: float = 0.01):
        a = self

        def mk(out):
            def bw():
                a._accumulate(out.grad * np.where(a.data > 0, 1.0, slope))
            return bw

        return Tensor._node(np.where(a.data > 0, a.data, slope * a.data), (a,), mk)

    def tanh(self):
        a = self
        t = np.tanh(a.data)

        def mk(out):
            def bw():
                a._accumulate(out.grad * (1.0 - t * t))
            return bw

        return Tensor._node(t, (a,), mk)

    def sigmoid(self):
        a = self
        s = 1.0 / (1.0 + np.exp(-a.data))

        def mk(out):
            def bw():
                a._accumulate(out.grad * s * (1.0 - s))
            return bw

        return Tensor._node(s, (a,), mk)

    def exp(self):
        a = self
        e = np.exp(a.data)

        def mk(out):
            def bw():
                a._accumulate(out.grad * e)
            return bw

        return Tensor._node(e, (a,), mk)

    # -- reductions --------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        a = self

        def mk(out):
            def bw():
                g = out.grad
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                a._accumulate(np.broadcast_to(g, a.data.shape).copy())
            return bw

        return Tensor._node(a.data.sum(axis=axis, keepdims=keepdims), (a,), mk)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    # -- shape manipulation --------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self

        def mk(out):
            def bw():
                a._accumulate(out.grad.reshape(a.data.shape))
            return bw

        return Tensor._node(a.data.reshape(shape), (a,), mk)

    def slice(self, axis: int, start: int, stop: int) -> "Tensor":
        a = self
        idx = [np.s_[:]] * a.data.ndim
        idx[axis] = np.s_[start:stop]
        idx = tuple(idx)

        def mk(out):
            def bw():
                g = np.zeros_like(a.data)
                g[idx] = out.grad
                a._accumulate(g)
            return bw

        return Tensor._node(a.data[idx], (a,), mk)

    def take(self, indices) -> "Tensor":
        """Gather rows along axis 0; backward is scatter-add."""
        a = self
        indices = np.asarray(indices, dtype=np.intp)

        def mk(out):
            def bw():
                g = np.zeros_like(a.data)
                np.add.at(g, indices, out.grad)
                a._accumulate(g)
            return bw

        return Tensor._node(a.data[indices], (a,), mk)


def _noop():
    return None


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [Tensor._wrap(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    offsets = np.cumsum([0] + [t.data.shape[axis] for t in tensors])

    def mk(out):
        def bw():
            for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
                if t.requires_grad:
                    idx = [np.s_[:]] * data.ndim
                    idx[axis] = np.s_[lo:hi]
                    t._accumulate(out.grad[tuple(idx)])
        return bw

    return Tensor._node(data, tuple(tensors), mk)


def stack(tensors, axis: int = 0) -> Tensor:
    expanded = []
    for t in tensors:
        t = Tensor._wrap(t)
        shape = t.shape[:axis] + (1,) + t.shape[axis:]
        expanded.append(t.reshape(shape))
    return concat(expanded, axis=axis)
