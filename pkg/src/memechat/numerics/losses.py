"""Loss primitives with fused analytic backward passes."""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError, Tensor, _maybe_record

IGNORE_ID = -1


class LossError(ValueError):
    """A loss was requested over an empty supervision set."""


def cross_entropy(logits: Tensor, targets, ignore_id: int = IGNORE_ID) -> Tensor:
    """Mean negative log-softmax of the target class over non-ignored rows.

    logits: (N, C); targets: int array of length N with entries in [0, C) or
    equal to ignore_id.
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ShapeError(
            f"cross_entropy: logits {logits.shape} vs targets {targets.shape}"
        )
    keep = targets != ignore_id
    n_kept = int(keep.sum())
    if n_kept == 0:
        raise LossError("cross_entropy: all positions ignored")
    kept_targets = targets[keep]
    if kept_targets.min() < 0 or kept_targets.max() >= logits.shape[1]:
        raise ValueError("cross_entropy: target id out of range")

    rows = logits.data[keep]
    shifted = rows - rows.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1)) - shifted[np.arange(n_kept), kept_targets]
    out = Tensor(np.asarray(logz.mean(), dtype=logits.dtype))

    def backward(g):
        p = np.exp(shifted)
        p /= p.sum(axis=1, keepdims=True)
        p[np.arange(n_kept), kept_targets] -= 1.0
        gl = np.zeros_like(logits.data)
        gl[keep] = p * (g / n_kept)
        return (gl,)

    return _maybe_record(out, (logits,), backward)


def l2_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Squared Euclidean norm of (pred - target), summed over all elements."""
    if pred.shape != target.shape:
        raise ShapeError(f"l2_loss: shape mismatch {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    out = Tensor(np.asarray((diff * diff).sum(), dtype=pred.dtype))

    def backward(g):
        return (2.0 * diff * g, -2.0 * diff * g)

    return _maybe_record(out, (pred, target), backward)
