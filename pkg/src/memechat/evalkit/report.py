"""Full evaluation run over a corpus, emitted as JSON or an aligned table."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..corpus.types import Corpus
from ..decoding.pipeline import generate_text
from ..decoding.sampler import SamplerConfig
from ..model.config import ModelConfig
from ..model.network import Params
from ..numerics import derive_seed
from .metrics import EvalError, bleu_n, distinct_n, perplexity
from .protocols import (
    emotion_accuracy,
    recall_at_k,
    response_turns,
    seen_unseen_breakdown,
    usage_accuracy,
)

BLEU_VARIANT = "corpus-level, uniform 1..n weights, add-one smoothing on orders >= 2"


@dataclass
class EvalConfig:
    recall_ns: tuple[int, ...] = (10,)
    recall_ks: tuple[int, ...] = (1, 2, 5)
    include_full_catalog: bool = True
    full_catalog_k: int = 5
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    usage_threshold: float = 0.5
    max_len: int = 500
    seed: int = 0
    emotion_top_ks: tuple[int, ...] = (1, 5)


@dataclass
class EvalReport:
    perplexity: float
    bleu2: float
    bleu4: float
    dist1: float
    dist2: float
    recalls: dict[str, float]
    usage_accuracy: float
    emotion_accuracy: dict[str, float]
    counts: dict[str, int]
    seen_unseen: dict[str, dict] | None = None
    bleu_variant: str = BLEU_VARIANT

    def to_json(self) -> str:
        payload = {
            "bleu_variant": self.bleu_variant,
            "perplexity": self.perplexity,
            "bleu2": self.bleu2,
            "bleu4": self.bleu4,
            "dist1": self.dist1,
            "dist2": self.dist2,
            "recalls": self.recalls,
            "usage_accuracy": self.usage_accuracy,
            "emotion_accuracy": self.emotion_accuracy,
            "counts": self.counts,
        }
        if self.seen_unseen is not None:
            payload["seen_unseen"] = self.seen_unseen
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_table(self) -> str:
        rows = [
            ("Perplexity", f"{self.perplexity:.2f}"),
            ("B-2", f"{100 * self.bleu2:.2f}"),
            ("B-4", f"{100 * self.bleu4:.2f}"),
            ("Dist-1", f"{100 * self.dist1:.2f}"),
            ("Dist-2", f"{100 * self.dist2:.2f}"),
        ]
        rows += [(name, f"{100 * score:.1f}") for name, score in self.recalls.items()]
        rows.append(("Usage acc", f"{100 * self.usage_accuracy:.1f}"))
        rows += [
            (f"Emotion acc (top-{k.split('_')[-1]})", f"{100 * v:.1f}")
            for k, v in self.emotion_accuracy.items()
        ]
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {value:>8}" for name, value in rows]
        return "\n".join([f"# BLEU: {self.bleu_variant}", *lines])


def generate_responses(
    params: Params,
    model_cfg: ModelConfig,
    corpus: Corpus,
    sampler: SamplerConfig,
    seed: int,
) -> tuple[list[list[int]], list[list[int]]]:
    """Sampled response per turn plus the gold reference texts."""
    candidates: list[list[int]] = []
    references: list[list[int]] = []
    for turn_idx, (d, i) in enumerate(response_turns(corpus)):
        rng = np.random.default_rng(derive_seed(seed, 7, turn_idx))
        text = generate_text(
            d.utterances[:i],
            d.utterances[i].speaker,
            params,
            model_cfg,
            corpus.catalog,
            sampler,
            rng,
        )
        candidates.append(text)
        references.append(list(d.utterances[i].text))
    return candidates, references


def evaluate_model(
    params: Params,
    model_cfg: ModelConfig,
    corpus: Corpus,
    cfg: EvalConfig | None = None,
    train_meme_ids: set[int] | None = None,
) -> EvalReport:
    cfg = cfg or EvalConfig()
    candidates, references = generate_responses(
        params, model_cfg, corpus, cfg.sampler, cfg.seed
    )

    recalls: dict[str, float] = {}
    meme_turns = sum(1 for _ in response_turns(corpus, memes_only=True))
    for n in cfg.recall_ns:
        if n > len(corpus.catalog):
            continue
        for k in cfg.recall_ks:
            recalls[f"R_{n}@{k}"] = recall_at_k(
                params, model_cfg, corpus, n, k, cfg.seed, cfg.max_len
            )
    if cfg.include_full_catalog:
        recalls[f"R_T@{cfg.full_catalog_k}"] = recall_at_k(
            params, model_cfg, corpus, None, cfg.full_catalog_k, cfg.seed, cfg.max_len
        )

    labels = list(model_cfg.emotion_labels)
    emotion: dict[str, float] = {}
    if labels:
        for k in cfg.emotion_top_ks:
            try:
                emotion[f"top_{k}"] = emotion_accuracy(
                    params, model_cfg, corpus, labels, top_k=k, max_len=cfg.max_len
                )
            except EvalError:  # corpus without labelled meme turns
                break

    seen_unseen = None
    if train_meme_ids is not None:
        seen_unseen = seen_unseen_breakdown(
            params, model_cfg, corpus, train_meme_ids,
            min(cfg.recall_ns) if cfg.recall_ns else None, 1, cfg.seed, cfg.max_len,
        )

    return EvalReport(
        perplexity=perplexity(params, model_cfg, corpus, cfg.max_len),
        bleu2=bleu_n(candidates, references, 2),
        bleu4=bleu_n(candidates, references, 4),
        dist1=distinct_n(candidates, 1),
        dist2=distinct_n(candidates, 2),
        recalls=recalls,
        usage_accuracy=usage_accuracy(
            params, model_cfg, corpus, cfg.usage_threshold, cfg.max_len
        ),
        emotion_accuracy=emotion,
        counts={
            "dialogues": len(corpus.dialogues),
            "response_turns": len(candidates),
            "meme_turns": meme_turns,
            "catalog": len(corpus.catalog),
        },
        seen_unseen=seen_unseen,
    )
