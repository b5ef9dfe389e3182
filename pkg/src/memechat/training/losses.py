"""Multi-task loss assembly: text NLL + usage cross-entropy + meme-feature L2."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus.flatten import TokenSequence
from ..model.config import ModelConfig
from ..model.network import Params, forward
from ..numerics import (
    LossError,
    RngStream,
    Tensor,
    add,
    cross_entropy,
    embedding_gather,
    l2_loss,
    mul,
)


@dataclass
class TrainConfig:
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    lambda_usage: float = 1.0
    lambda_meme: float = 1.0
    batch_size: int = 8
    max_len: int = 500
    epochs: int = 10
    seed: int = 0
    max_steps: int | None = None
    pretrain_memes: bool = False
    pretrain_emotion: bool = False

    def __post_init__(self):
        if self.lambda_usage < 0 or self.lambda_meme < 0:
            raise ValueError("loss scale factors must be >= 0")


@dataclass
class LossBreakdown:
    l_tr: Tensor
    l_up: Tensor
    l_ms: Tensor
    total: Tensor
    n_text_targets: int
    n_tags: int
    n_meme_tags: int

    def floats(self) -> dict[str, float]:
        return {
            "L_TR": self.l_tr.item(),
            "L_UP": self.l_up.item(),
            "L_MS": self.l_ms.item(),
            "total": self.total.item(),
        }


def compute_losses(
    batch: list[TokenSequence],
    params: Params,
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    train: bool = False,
    rng: RngStream | None = None,
) -> LossBreakdown:
    """Batch loss: L_TR over response text targets, L_UP over response tags,
    L_MS over response tags that carry a meme (exact zero when none do)."""
    if not batch:
        raise LossError("compute_losses: empty batch")
    dtype = next(iter(params.values())).dtype

    text_sum: Tensor | None = None
    usage_sum: Tensor | None = None
    meme_sum: Tensor | None = None
    n_text = n_tags = n_meme = 0

    for seq in batch:
        fo = forward(seq, params, model_cfg, train=train, rng=rng)

        kept = seq.n_lm_targets()
        if kept:
            part = mul(cross_entropy(fo.lm_logits, seq.lm_targets), float(kept))
            text_sum = part if text_sum is None else add(text_sum, part)
            n_text += kept

        sup = [j for j, t in enumerate(seq.tags) if t.supervised]
        if sup:
            rows = embedding_gather(fo.usage_logits, np.asarray(sup))
            ys = np.asarray([seq.tags[j].y for j in sup])
            part = mul(cross_entropy(rows, ys), float(len(sup)))
            usage_sum = part if usage_sum is None else add(usage_sum, part)
            n_tags += len(sup)

        meme_idx = [j for j in sup if seq.tags[j].y == 1]
        if meme_idx:
            g_rows = embedding_gather(fo.regress, np.asarray(meme_idx))
            targets = Tensor(
                np.stack([seq.tags[j].feature for j in meme_idx]), dtype=dtype
            )
            part = l2_loss(g_rows, targets)  # sums the per-tag squared norms
            meme_sum = part if meme_sum is None else add(meme_sum, part)
            n_meme += len(meme_idx)

    if n_text == 0 or n_tags == 0:
        raise LossError("compute_losses: batch has no supervised positions")

    l_tr = mul(text_sum, 1.0 / n_text)
    l_up = mul(usage_sum, 1.0 / n_tags)
    l_ms = mul(meme_sum, 1.0 / n_meme) if n_meme else Tensor(np.zeros((), dtype=dtype))
    total = add(add(l_tr, mul(l_up, cfg.lambda_usage)), mul(l_ms, cfg.lambda_meme))
    return LossBreakdown(
        l_tr=l_tr,
        l_up=l_up,
        l_ms=l_ms,
        total=total,
        n_text_targets=n_text,
        n_tags=n_tags,
        n_meme_tags=n_meme,
    )
