"""Dense tensors with reverse-mode autodiff recorded on an explicit tape.

Compute is float32 by default; gradient checking runs the same graph in
float64 (build the inputs/params with dtype=np.float64).

Broadcasting is deliberately narrow: the second operand of add/mul may be a
scalar or a suffix of the first operand's shape (bias over a leading batch
dimension). Anything else must be reshaped explicitly so shape bugs surface
at the call site.
"""

from __future__ import annotations

import threading

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "ShapeError",
    "add",
    "sub",
    "mul",
    "matmul",
    "linear",
    "embedding_gather",
    "layernorm",
    "softmax",
    "gelu",
    "relu",
    "dropout",
    "concat",
    "slice_axis",
    "transpose",
    "reshape",
    "sum_",
    "mean_",
]

_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


class ShapeError(ValueError):
    """Operand shapes incompatible with the requested op."""


class Tensor:
    """A dense float array; set requires_grad on leaves to collect gradients."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype, copy=False)
        elif arr.dtype != np.float32 and arr.dtype != np.float64:
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = requires_grad
        self.grad = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return (
            f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, "
            f"requires_grad={self.requires_grad})"
        )

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


_tapes = threading.local()


def _active_tape():
    stack = getattr(_tapes, "stack", None)
    if stack:
        return stack[-1]
    return None


class Tape:
    """Ordered record of differentiable ops executed while the tape is active.

    Ops append in execution order, so the list is already topologically
    sorted; backward() makes a single reversed pass and therefore visits
    each recorded node exactly once. Tapes nest (a stack per thread); only
    the innermost active tape records.
    """

    def __init__(self):
        self._nodes: list[tuple[Tensor, tuple[Tensor, ...], object]] = []
        self._live: set[int] = set()

    def __enter__(self) -> "Tape":
        stack = getattr(_tapes, "stack", None)
        if stack is None:
            stack = _tapes.stack = []
        stack.append(self)
        return self

    def __exit__(self, *exc):
        _tapes.stack.pop()
        return False

    def __len__(self) -> int:
        return len(self._nodes)

    def _flows(self, t: Tensor) -> bool:
        return t.requires_grad or id(t) in self._live

    def _record(self, out: Tensor, inputs: tuple[Tensor, ...], backward) -> None:
        self._nodes.append((out, inputs, backward))
        self._live.add(id(out))

    def backward(self, loss: Tensor, seed_grad: np.ndarray | None = None) -> None:
        """Accumulate d(loss)/d(leaf) into .grad of every requires_grad leaf."""
        if seed_grad is None:
            seed_grad = np.ones_like(loss.data)
        grads: dict[int, np.ndarray] = {id(loss): seed_grad}
        leaves: dict[int, Tensor] = {}
        if loss.requires_grad:
            leaves[id(loss)] = loss
        for out, inputs, backward_fn in reversed(self._nodes):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for t, gt in zip(inputs, backward_fn(g)):
                if gt is None or not self._flows(t):
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + gt
                else:
                    grads[key] = gt
                if t.requires_grad:
                    leaves[key] = t
        for key, t in leaves.items():
            gt = grads.get(key)
            if gt is None:
                continue
            if t.grad is None:
                t.grad = np.array(gt, copy=True)
            else:
                t.grad = t.grad + gt


def _maybe_record(out: Tensor, inputs: tuple[Tensor, ...], backward) -> Tensor:
    tape = _active_tape()
    if tape is not None and any(tape._flows(t) for t in inputs):
        tape._record(out, inputs, backward)
    return out


def _lift(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(x), dtype=dtype)


def _check_suffix(big: tuple[int, ...], small: tuple[int, ...], op: str) -> None:
    if len(small) > len(big) or (small and big[len(big) - len(small):] != small):
        raise ShapeError(f"{op}: shape {small} is not a suffix of {big}")


def _reduce_to(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    return g


def add(a: Tensor, b) -> Tensor:
    a, b = _lift(a), _lift(b, a)
    if a.ndim >= b.ndim:
        _check_suffix(a.shape, b.shape, "add")
    else:
        _check_suffix(b.shape, a.shape, "add")
    out = Tensor(a.data + b.data)

    def backward(g):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return _maybe_record(out, (a, b), backward)


def sub(a: Tensor, b) -> Tensor:
    b = _lift(b, a if isinstance(a, Tensor) else None)
    return add(a, mul(b, -1.0))


def mul(a: Tensor, b) -> Tensor:
    a, b = _lift(a), _lift(b, a)
    if a.ndim >= b.ndim:
        _check_suffix(a.shape, b.shape, "mul")
    else:
        _check_suffix(b.shape, a.shape, "mul")
    out = Tensor(a.data * b.data)

    def backward(g):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return _maybe_record(out, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul: operands must be >=2-D, got {a.shape} @ {b.shape}")
    if a.shape[-1] != b.shape[-2] or a.shape[:-2] != b.shape[:-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data)

    def backward(g):
        return g @ b.data.swapaxes(-1, -2), a.data.swapaxes(-1, -2) @ g

    return _maybe_record(out, (a, b), backward)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with bias broadcast over leading dimensions."""
    return add(matmul(x, w), b)


def embedding_gather(table: Tensor, ids) -> Tensor:
    """Select rows of a 2-D table by integer index; backward scatter-adds."""
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError(f"embedding_gather: table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeError(
            f"embedding_gather: index out of range for table with {table.shape[0]} rows"
        )
    out = Tensor(table.data[ids])

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        return (gt,)

    return _maybe_record(out, (table,), backward)


def layernorm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
        raise ShapeError(
            f"layernorm: affine shapes {gain.shape}/{bias.shape} do not match {x.shape}"
        )
    n = x.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = Tensor(gain.data * xhat + bias.data)

    def backward(g):
        gy = g * gain.data
        gx = (
            inv
            / n
            * (n * gy - gy.sum(axis=-1, keepdims=True) - xhat * (gy * xhat).sum(axis=-1, keepdims=True))
        )
        lead = tuple(range(g.ndim - 1))
        return gx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _maybe_record(out, (x, gain, bias), backward)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(p)

    def backward(g):
        return (p * (g - (g * p).sum(axis=axis, keepdims=True)),)

    return _maybe_record(out, (x,), backward)


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit (tanh approximation)."""
    u = _GELU_C * (x.data + _GELU_A * x.data**3)
    t = np.tanh(u)
    out = Tensor(0.5 * x.data * (1.0 + t))

    def backward(g):
        du = _GELU_C * (1.0 + 3.0 * _GELU_A * x.data**2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t**2) * du),)

    return _maybe_record(out, (x,), backward)


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0))

    def backward(g):
        return (g * (x.data > 0.0),)

    return _maybe_record(out, (x,), backward)


def dropout(x: Tensor, p: float, train: bool, stream=None) -> Tensor:
    """Inverted dropout; identity when train is False or p == 0.

    The mask comes from a counter-based stream (numerics.rng.RngStream) so a
    run is bit-reproducible given the stream's seed.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout: p must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if stream is None:
        raise ValueError("dropout: training mode with p > 0 requires an rng stream")
    mask = (stream.uniform(x.shape) >= p).astype(x.dtype) / (1.0 - p)
    out = Tensor(x.data * mask)

    def backward(g):
        return (g * mask,)

    return _maybe_record(out, (x,), backward)


def concat(parts: list[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise ShapeError("concat: empty input list")
    out = Tensor(np.concatenate([t.data for t in parts], axis=axis))
    sizes = [t.shape[axis] for t in parts]
    offsets = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, offsets, axis=axis))

    return _maybe_record(out, tuple(parts), backward)


def slice_axis(x: Tensor, axis: int, start: int, stop: int) -> Tensor:
    """Contiguous slice along one axis; backward pads with zeros."""
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = Tensor(x.data[index])

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[index] = g
        return (gx,)

    return _maybe_record(out, (x,), backward)


def transpose(x: Tensor, axes: tuple[int, ...] | None = None) -> Tensor:
    out = Tensor(np.transpose(x.data, axes))
    inverse = None if axes is None else tuple(np.argsort(axes))

    def backward(g):
        return (np.transpose(g, inverse),)

    return _maybe_record(out, (x,), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    out = Tensor(x.data.reshape(shape))

    def backward(g):
        return (g.reshape(x.shape),)

    return _maybe_record(out, (x,), backward)


def sum_(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(x.data.sum(axis=axis, keepdims=keepdims))

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _maybe_record(out, (x,), backward)


def mean_(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = x.data.size if axis is None else x.shape[axis]
    return mul(sum_(x, axis=axis, keepdims=keepdims), 1.0 / count)
