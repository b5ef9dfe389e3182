from .adam import AdamState, NonFiniteGradient, adam_step, collect_grads, zero_grads
from .gradcheck import grad_check
from .losses import IGNORE_ID, LossError, cross_entropy, l2_loss
from .rng import RngStream, derive_seed
from .serialize import BlobError, read_tensor_blob, write_tensor_blob
from .tensor import (
    ShapeError,
    Tape,
    Tensor,
    add,
    concat,
    dropout,
    embedding_gather,
    gelu,
    layernorm,
    linear,
    matmul,
    mean_,
    mul,
    relu,
    reshape,
    slice_axis,
    softmax,
    sub,
    sum_,
    transpose,
)

__all__ = [
    "AdamState",
    "BlobError",
    "IGNORE_ID",
    "LossError",
    "NonFiniteGradient",
    "RngStream",
    "ShapeError",
    "Tape",
    "Tensor",
    "adam_step",
    "add",
    "collect_grads",
    "concat",
    "cross_entropy",
    "derive_seed",
    "dropout",
    "embedding_gather",
    "gelu",
    "grad_check",
    "l2_loss",
    "layernorm",
    "linear",
    "matmul",
    "mean_",
    "mul",
    "read_tensor_blob",
    "relu",
    "reshape",
    "slice_axis",
    "softmax",
    "sub",
    "sum_",
    "transpose",
    "write_tensor_blob",
    "zero_grads",
]
