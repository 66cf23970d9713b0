from .adam import Adam, AdamState, adam_step
from .gradcheck import grad_check, grad_check_fn
from .layers import (LayerParams, apply_activation, backward, dense, forward,
                     net_forward, net_params, net_receptive_field, tconv1d,
                     upsample_head)
from .rng import SeedStream
from .serialize import load_blob, save_blob
from .tensor import Tensor, concat, default_dtype, set_default_dtype, stack

__all__ = [
    "Adam", "AdamState", "adam_step", "grad_check", "grad_check_fn",
    "LayerParams", "apply_activation", "backward", "dense", "forward",
    "net_forward", "net_params", "net_receptive_field", "tconv1d",
    "upsample_head", "SeedStream", "load_blob", "save_blob",
    "Tensor", "concat", "default_dtype", "set_default_dtype", "stack",
]
