"""Network layers: dense, causal temporal convolution, transposed-conv head.

Layers are plain parameter records (:class:`LayerParams`); `forward` builds
the autodiff graph. A causal temporal layer sees only the current and past
positions of its input; stacking three kernel-2 layers yields a receptive
field of 4 frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from .rng import SeedStream
from .tensor import Tensor, concat

KINDS = ("dense", "tconv1d", "upsample_head")
ACTIVATIONS = ("relu", "leaky_relu", "tanh", "sigmoid", "identity")


def _canon_activation(name: str) -> str:
    name = name.replace("-", "_")
    if name not in ACTIVATIONS:
        raise ValueError(f"unknown activation {name!r}; expected one of {ACTIVATIONS}")
    return name


def apply_activation(x: Tensor, name: str) -> Tensor:
    if name == "relu":
        return x.relu()
    if name == "leaky_relu":
        return x.leaky_relu(0.01)
    if name == "tanh":
        return x.tanh()
    if name == "sigmoid":
        return x.sigmoid()
    return x


@dataclass
class LayerParams:
    """One layer's kind, parameters, and activation.

    Weight layout per kind:
      dense:         weights (fan_in, fan_out)
      tconv1d:       weights (kernel * in_ch, out_ch), taps ordered oldest-first
      upsample_head: weights (kernel * in_ch, out_ch), plus meta["stride"]
    """

    kind: str
    weights: Tensor
    bias: Tensor
    activation: str = "identity"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        self.activation = _canon_activation(self.activation)
        if self.kind == "dense":
            if self.weights.shape[1] != self.bias.shape[0]:
                raise ShapeError("dense bias", (self.weights.shape[1],), self.bias.shape)
        else:
            k, cin, cout = self.meta["kernel"], self.meta["in_ch"], self.meta["out_ch"]
            if self.weights.shape != (k * cin, cout):
                raise ShapeError(f"{self.kind} weights", (k * cin, cout), self.weights.shape)
            if self.bias.shape != (cout,):
                raise ShapeError(f"{self.kind} bias", (cout,), self.bias.shape)

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]

    @property
    def receptive_field(self) -> int:
        return self.meta.get("kernel", 1) if self.kind == "tconv1d" else 1

    def named_params(self, prefix: str):
        return [(f"{prefix}.w", self.weights), (f"{prefix}.b", self.bias)]


def _init_weight(fan_in: int, fan_out: int, activation: str, rng: SeedStream) -> np.ndarray:
    if activation in ("relu", "leaky_relu"):
        bound = np.sqrt(6.0 / fan_in)
    else:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def dense(fan_in: int, fan_out: int, activation: str, rng: SeedStream) -> LayerParams:
    w = Tensor(_init_weight(fan_in, fan_out, activation, rng), requires_grad=True)
    b = Tensor(np.zeros(fan_out), requires_grad=True)
    return LayerParams("dense", w, b, activation)


def tconv1d(in_ch: int, out_ch: int, kernel: int, activation: str, rng: SeedStream) -> LayerParams:
    w = Tensor(_init_weight(kernel * in_ch, out_ch, activation, rng), requires_grad=True)
    b = Tensor(np.zeros(out_ch), requires_grad=True)
    return LayerParams("tconv1d", w, b, activation,
                       meta={"kernel": kernel, "in_ch": in_ch, "out_ch": out_ch})


def upsample_head(in_ch: int, out_ch: int, kernel: int, stride: int,
                  activation: str, rng: SeedStream) -> LayerParams:
    w = Tensor(_init_weight(kernel * in_ch, out_ch, activation, rng), requires_grad=True)
    b = Tensor(np.zeros(out_ch), requires_grad=True)
    return LayerParams("upsample_head", w, b, activation,
                       meta={"kernel": kernel, "in_ch": in_ch, "out_ch": out_ch,
                             "stride": stride})


# -- forward --------------------------------------------------------------


def forward(params: LayerParams, x: Tensor) -> Tensor:
    """Apply one layer. Pure in (params, x); output checked finite."""
    x = Tensor._wrap(x)
    if params.kind == "dense":
        out = _dense_forward(params, x)
    elif params.kind == "tconv1d":
        out = _tconv_forward(params, x)
    else:
        out = _upsample_forward(params, x)
    return apply_activation(out, params.activation).assert_finite(f"{params.kind} output")


def _dense_forward(params: LayerParams, x: Tensor) -> Tensor:
    squeeze = x.data.ndim == 1
    if squeeze:
        x = x.reshape(1, -1)
    if x.data.ndim != 2 or x.shape[1] != params.fan_in:
        raise ShapeError("dense input", ("*", params.fan_in), x.shape)
    out = x @ params.weights + params.bias.reshape(1, -1)
    return out.reshape(-1) if squeeze else out


def _as_time_major(x: Tensor, cin: int, kind: str):
    """Normalize (T, C) / (B, T, C) input to (B, T, C); report original rank."""
    if x.data.ndim == 2:
        return x.reshape(1, *x.shape), True
    if x.data.ndim != 3 or x.shape[2] != cin:
        raise ShapeError(f"{kind} input", ("*", "*", cin), x.shape)
    return x, False


def _tconv_forward(params: LayerParams, x: Tensor) -> Tensor:
    k, cin, cout = params.meta["kernel"], params.meta["in_ch"], params.meta["out_ch"]
    x, squeeze = _as_time_major(x, cin, "tconv1d")
    if x.shape[2] != cin:
        raise ShapeError("tconv1d channels", ("*", "*", cin), x.shape)
    B, T, _ = x.shape
    if T < 1:
        raise ShapeError("tconv1d time axis", (">=1",), (T,))
    # Causal left padding: repeat the first frame k-1 times.
    if k > 1:
        first = x.slice(1, 0, 1)
        x_pad = concat([first] * (k - 1) + [x], axis=1)
    else:
        x_pad = x
    taps = [x_pad.slice(1, i, i + T) for i in range(k)]  # oldest tap first
    win = concat(taps, axis=2).reshape(B * T, k * cin)
    out = (win @ params.weights + params.bias.reshape(1, -1)).reshape(B, T, cout)
    return out.reshape(T, cout) if squeeze else out


def _upsample_forward(params: LayerParams, x: Tensor) -> Tensor:
    k, cin, cout = params.meta["kernel"], params.meta["in_ch"], params.meta["out_ch"]
    s = params.meta["stride"]
    x, squeeze = _as_time_major(x, cin, "upsample_head")
    B, L, _ = x.shape
    out_len = (L - 1) * s + k
    total = None
    for i in range(k):
        w_i = params.weights.slice(0, i * cin, (i + 1) * cin)  # (cin, cout)
        y = (x.reshape(B * L, cin) @ w_i).reshape(B, L, cout)
        if s > 1:  # zero-stuff between input positions
            z = Tensor(np.zeros((B, L, (s - 1) * cout)))
            y = concat([y, z], axis=2).reshape(B, L * s, cout)
        # shift tap i forward by i positions, then fit to out_len
        pieces = []
        if i > 0:
            pieces.append(Tensor(np.zeros((B, i, cout))))
        pieces.append(y)
        tail = out_len - (y.shape[1] + i)
        if tail > 0:
            pieces.append(Tensor(np.zeros((B, tail, cout))))
        shifted = concat(pieces, axis=1).slice(1, 0, out_len)
        total = shifted if total is None else total + shifted
    out = total + params.bias.reshape(1, 1, -1)
    return out.reshape(out_len, cout) if squeeze else out


# -- per-layer backward (analytic via the tape) -----------------------------


def backward(params: LayerParams, x, upstream):
    """Gradients of one layer: returns (input_grad, {"w": ..., "b": ...}).

    Recomputes the forward pass on a fresh graph so the caller's parameter
    tensors are left untouched.
    """
    x_t = Tensor(np.asarray(x if not isinstance(x, Tensor) else x.data), requires_grad=True)
    p = LayerParams(params.kind,
                    Tensor(params.weights.data.copy(), requires_grad=True),
                    Tensor(params.bias.data.copy(), requires_grad=True),
                    params.activation, dict(params.meta))
    out = forward(p, x_t)
    up = np.asarray(upstream if not isinstance(upstream, Tensor) else upstream.data)
    if up.shape != out.shape:
        raise ShapeError("upstream grad", out.shape, up.shape)
    out.backward(up)
    return x_t.grad, {"w": p.weights.grad, "b": p.bias.grad}


# -- sequential helpers ------------------------------------------------------


def net_forward(layers, x: Tensor) -> Tensor:
    for lp in layers:
        x = forward(lp, x)
    return x


def net_params(layers, prefix: str):
    out = []
    for i, lp in enumerate(layers):
        out.extend(lp.named_params(f"{prefix}.{i}"))
    return out


def net_receptive_field(layers) -> int:
    return 1 + sum(lp.receptive_field - 1 for lp in layers)
