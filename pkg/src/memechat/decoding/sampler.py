"""Nucleus (top-p) sampling with temperature."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SamplerConfig:
    top_p: float = 0.9
    temperature: float = 0.7
    max_new_tokens: int = 32
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.max_new_tokens < 0:
            raise ValueError("max_new_tokens must be >= 0")


def temperature_softmax(logits: np.ndarray, temperature: float) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64) / temperature
    z -= z.max()
    p = np.exp(z)
    return p / p.sum()


def nucleus_support(probs: np.ndarray, top_p: float) -> np.ndarray:
    """Smallest probability-sorted prefix with cumulative mass >= top_p.

    The boundary token is included, so the support is never empty. Ties in
    probability resolve toward lower token ids (stable sort).
    """
    order = np.argsort(-probs, kind="stable")
    csum = np.cumsum(probs[order])
    cut = int(np.searchsorted(csum, top_p, side="left"))
    return order[: cut + 1]


def nucleus_sample(
    logits: np.ndarray, cfg: SamplerConfig, rng: np.random.Generator
) -> int:
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("nucleus_sample: logits must be finite")
    probs = temperature_softmax(logits, cfg.temperature)
    support = nucleus_support(probs, cfg.top_p)
    kept = probs[support]
    kept /= kept.sum()
    return int(rng.choice(support, p=kept))
