"""Deterministic multi-task training loop with per-epoch checkpoints."""

from __future__ import annotations

import json
import math
import shutil
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from ..corpus.flatten import TokenSequence, make_examples
from ..corpus.types import Corpus
from ..model.checkpoint import save_checkpoint
from ..model.config import ModelConfig
from ..model.network import Params
from ..numerics import AdamState, RngStream, Tape, adam_step, collect_grads, derive_seed, zero_grads
from .losses import TrainConfig, compute_losses

StepCallback = Callable[[dict], bool]


@dataclass
class TrainResult:
    steps: int
    epochs_run: int
    best_valid_ppl: float
    best_checkpoint: Path | None
    last_checkpoint: Path | None
    log_path: Path
    aborted: bool = False
    stopped_early: bool = False


def build_examples(corpus: Corpus, max_len: int) -> list[TokenSequence]:
    """One example per response position across the corpus."""
    out: list[TokenSequence] = []
    for d in corpus.dialogues:
        out.extend(make_examples(d, corpus.vocab, corpus.catalog, max_len))
    return out


def train(
    splits: dict[str, Corpus],
    params: Params,
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    out_dir: str | Path,
    callbacks: list[StepCallback] | None = None,
) -> TrainResult:
    """Train on splits["train"], validating on splits["valid"] when present.

    Deterministic under cfg.seed: example shuffling and every dropout mask
    derive from it. Keeps a checkpoint per epoch plus best-by-valid-ppl;
    a non-finite loss aborts, preserving the current (still finite) params.
    """
    if cfg.max_len > model_cfg.max_positions:
        raise ValueError("max_len exceeds model max_positions")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl"

    train_corpus = splits["train"]
    valid_corpus = splits.get("valid")
    examples = build_examples(train_corpus, cfg.max_len)
    if not examples:
        raise ValueError("training corpus produced no examples")

    shuffle_rng = np.random.default_rng(derive_seed(cfg.seed, 1))
    state = AdamState()
    best_ppl = math.inf
    best_path: Path | None = None
    last_path: Path | None = None
    step = 0
    epochs_run = 0
    aborted = False
    stopped = False

    with log_path.open("w", encoding="utf-8") as log:
        for epoch in range(cfg.epochs):
            order = shuffle_rng.permutation(len(examples))
            for lo in range(0, len(order), cfg.batch_size):
                batch = [examples[int(i)] for i in order[lo : lo + cfg.batch_size]]
                rng = RngStream(derive_seed(cfg.seed, 2, step))
                with Tape() as tape:
                    breakdown = compute_losses(
                        batch, params, model_cfg, cfg, train=True, rng=rng
                    )
                total = breakdown.total.item()
                if not math.isfinite(total):
                    aborted = True
                    last_path = out_dir / "aborted.ckpt"
                    save_checkpoint(
                        last_path, model_cfg, params,
                        extra={"train_config": asdict(cfg), "step": step, "aborted": True},
                    )
                    break
                tape.backward(breakdown.total)
                grads = collect_grads(params)
                zero_grads(params)
                adam_step(params, grads, state, cfg.lr, cfg.beta1, cfg.beta2)

                record = {"step": step, **breakdown.floats(), "lr": cfg.lr}
                log.write(json.dumps(record, sort_keys=True) + "\n")
                step += 1
                if callbacks and any(cb(record) for cb in callbacks):
                    stopped = True
                    break
                if cfg.max_steps is not None and step >= cfg.max_steps:
                    stopped = True
                    break
            if aborted or stopped:
                break

            epochs_run += 1
            last_path = out_dir / f"epoch_{epoch:03d}.ckpt"
            save_checkpoint(
                last_path, model_cfg, params,
                extra={"train_config": asdict(cfg), "epoch": epoch, "step": step},
            )
            if valid_corpus is not None and valid_corpus.dialogues:
                from ..evalkit.metrics import perplexity

                ppl = perplexity(params, model_cfg, valid_corpus, max_len=cfg.max_len)
                if ppl < best_ppl:
                    best_ppl = ppl
                    best_path = out_dir / "best.ckpt"
                    shutil.copyfile(last_path, best_path)

    if not aborted and (stopped or last_path is None):
        last_path = out_dir / "last.ckpt"
        save_checkpoint(
            last_path, model_cfg, params,
            extra={"train_config": asdict(cfg), "step": step},
        )

    return TrainResult(
        steps=step,
        epochs_run=epochs_run,
        best_valid_ppl=best_ppl,
        best_checkpoint=best_path,
        last_checkpoint=last_path,
        log_path=log_path,
        aborted=aborted,
        stopped_early=stopped,
    )
