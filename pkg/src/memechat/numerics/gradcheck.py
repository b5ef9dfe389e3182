"""Central finite-difference verification of taped gradients."""

from __future__ import annotations

import numpy as np

from .tensor import Tape, Tensor


def grad_check(fn, inputs: list[Tensor], eps: float = 1e-5) -> float:
    """Max relative error between taped and numerical gradients of a scalar fn.

    fn(*inputs) must return a scalar Tensor and be deterministic. Inputs
    should be float64 for the check to be meaningful. Relative error per
    element is |a - n| / max(|a|, |n|, 1).
    """
    for t in inputs:
        if t.dtype != np.float64:
            raise ValueError("grad_check requires float64 inputs")
        t.zero_grad()
        t.requires_grad = True
    with Tape() as tape:
        out = fn(*inputs)
    if out.data.ndim != 0:
        raise ValueError("grad_check: fn must return a scalar")
    tape.backward(out)

    worst = 0.0
    for t in inputs:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        aflat = analytic.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = float(fn(*inputs).data)
            flat[i] = orig - eps
            f_minus = float(fn(*inputs).data)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = float(aflat[i])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1.0)
            worst = max(worst, rel)
    return worst
