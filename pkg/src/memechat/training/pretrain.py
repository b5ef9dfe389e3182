"""The two warm-up tasks: meme-group classification (initializes the meme
projection) and emotion prediction at meme-bearing response tags."""

from __future__ import annotations

from collections import Counter

import numpy as np

from ..corpus.flatten import flatten_utterances
from ..corpus.types import Corpus, MemeCatalog
from ..model.config import ModelConfig
from ..model.network import Params, forward
from ..numerics import (
    AdamState,
    Tape,
    Tensor,
    adam_step,
    collect_grads,
    cross_entropy,
    derive_seed,
    embedding_gather,
    linear,
    relu,
    zero_grads,
)
from ..corpus.types import MEME_GROUPS


class PretrainError(ValueError):
    pass


def _group_arrays(catalog: MemeCatalog) -> tuple[np.ndarray, np.ndarray]:
    entries = sorted(catalog, key=lambda e: e.id)
    feats = np.stack([e.feature for e in entries]).astype(np.float32)
    labels = np.asarray([MEME_GROUPS.index(e.group) for e in entries], dtype=np.int64)
    return feats, labels


def classify_meme_groups(proj_and_cls: Params, features: np.ndarray) -> np.ndarray:
    """Group predictions from a projection + classifier parameter set."""
    x = Tensor(features)
    h = linear(x, proj_and_cls["meme_proj.w"], proj_and_cls["meme_proj.b"])
    h = relu(linear(h, proj_and_cls["cls.w1"], proj_and_cls["cls.b1"]))
    logits = linear(h, proj_and_cls["cls.w2"], proj_and_cls["cls.b2"])
    return logits.data.argmax(axis=1)


def pretrain_meme_features(
    catalog: MemeCatalog,
    model_cfg: ModelConfig,
    seed: int = 0,
    steps: int = 500,
    lr: float = 1e-2,
) -> tuple[Params, dict]:
    """Fit the meme projection by classifying features into their four groups.

    Returns the projection tensors (named exactly like the main model's
    meme projection, ready to install) plus training info; the classifier
    itself is throwaway scaffolding.
    """
    feats, labels = _group_arrays(catalog)
    if len(set(labels.tolist())) < 2:
        raise PretrainError("catalog covers a single group; nothing to classify")

    rng = np.random.default_rng(seed)
    d, h = model_cfg.d_model, model_cfg.hidden

    def w(*shape):
        return Tensor(
            rng.normal(0.0, 0.02, size=shape), requires_grad=True, dtype=np.float32
        )

    def zeros(*shape):
        return Tensor(np.zeros(shape, dtype=np.float32), requires_grad=True)

    p: Params = {
        "meme_proj.w": w(catalog.feature_dim, d),
        "meme_proj.b": zeros(d),
        "cls.w1": w(d, h),
        "cls.b1": zeros(h),
        "cls.w2": w(h, len(MEME_GROUPS)),
        "cls.b2": zeros(len(MEME_GROUPS)),
    }
    state = AdamState()
    x = Tensor(feats)
    losses: list[float] = []
    for _ in range(steps):
        with Tape() as tape:
            hidden = linear(x, p["meme_proj.w"], p["meme_proj.b"])
            hidden = relu(linear(hidden, p["cls.w1"], p["cls.b1"]))
            loss = cross_entropy(linear(hidden, p["cls.w2"], p["cls.b2"]), labels)
        tape.backward(loss)
        grads = collect_grads(p)
        zero_grads(p)
        adam_step(p, grads, state, lr)
        losses.append(loss.item())

    accuracy = float((classify_meme_groups(p, feats) == labels).mean())
    projection = {"meme_proj.w": p["meme_proj.w"], "meme_proj.b": p["meme_proj.b"]}
    return projection, {
        "accuracy": accuracy,
        "final_loss": losses[-1] if losses else None,
        "steps": steps,
    }


def install_projection(params: Params, projection: Params) -> None:
    for name, tensor in projection.items():
        if name not in params:
            raise PretrainError(f"unknown projection parameter {name!r}")
        if params[name].shape != tensor.shape:
            raise PretrainError(f"projection shape mismatch for {name!r}")
        params[name].data = tensor.data.astype(params[name].dtype)


def select_emotion_labels(corpus: Corpus, max_labels: int = 100) -> list[str]:
    """Most frequent emotion labels, capped at max_labels; ties break by
    label string order."""
    freq: Counter[str] = Counter(
        u.emotion
        for d in corpus.dialogues
        for u in d.utterances
        if u.emotion is not None
    )
    ranked = sorted(freq, key=lambda s: (-freq[s], s))
    return ranked[:max_labels]


def emotion_examples(
    corpus: Corpus, labels: list[str], max_len: int
) -> list[tuple[object, int]]:
    """(flattened prefix ending at a meme+emotion response, class id) pairs."""
    index = {label: i for i, label in enumerate(labels)}
    out = []
    for d in corpus.dialogues:
        for i in range(1, len(d.utterances)):
            u = d.utterances[i]
            if u.meme_id is None or u.emotion is None or u.emotion not in index:
                continue
            seq = flatten_utterances(
                d.utterances[: i + 1], corpus.vocab, corpus.catalog, max_len,
                supervise_from=i,
            )
            out.append((seq, index[u.emotion]))
    return out


def pretrain_emotion(
    corpus: Corpus,
    params: Params,
    model_cfg: ModelConfig,
    seed: int = 0,
    steps: int = 300,
    batch_size: int = 8,
    lr: float = 1e-3,
    max_len: int = 500,
    max_labels: int = 100,
    head_only: bool = False,
) -> dict:
    """Train the emotion head (and trunk) at final-utterance tag positions.

    Uses the config's emotion label set when present, otherwise the corpus
    top-max_labels labels truncated to the head width. Classes are balanced
    by uniform label-first resampling, deterministic under the seed.
    head_only freezes everything but the emotion MLP, for re-calibrating the
    head against an already-trained trunk without disturbing it.
    """
    if model_cfg.emotion_labels:
        labels = list(model_cfg.emotion_labels)
    else:
        labels = select_emotion_labels(corpus, max_labels)[: model_cfg.n_emotions]
    if not labels:
        raise PretrainError("corpus has no emotion labels")

    examples = emotion_examples(corpus, labels, max_len)
    if not examples:
        raise PretrainError("no emotion-labelled response turns in corpus")
    by_class: dict[int, list[int]] = {}
    for idx, (_, cls) in enumerate(examples):
        by_class.setdefault(cls, []).append(idx)
    classes = sorted(by_class)

    rng = np.random.default_rng(derive_seed(seed, 3))
    state = AdamState()
    losses: list[float] = []
    for _ in range(steps):
        picked_classes = rng.choice(classes, size=batch_size, replace=True)
        picked = [
            by_class[int(c)][int(rng.integers(len(by_class[int(c)])))]
            for c in picked_classes
        ]
        with Tape() as tape:
            loss_sum = None
            for idx in picked:
                seq, cls = examples[idx]
                fo = forward(seq, params, model_cfg)
                row = embedding_gather(fo.emotion_logits, np.asarray([len(seq.tags) - 1]))
                part = cross_entropy(row, np.asarray([cls]))
                loss_sum = part if loss_sum is None else loss_sum + part
            loss = loss_sum * (1.0 / len(picked))
        tape.backward(loss)
        grads = collect_grads(params)
        zero_grads(params)
        if head_only:
            grads = {k: g for k, g in grads.items() if k.startswith("emotion.")}
        adam_step(params, grads, state, lr)
        losses.append(loss.item())

    hits = 0
    for seq, cls in examples:
        fo = forward(seq, params, model_cfg)
        pred = int(fo.emotion_logits.data[-1].argmax())
        hits += pred == cls
    return {
        "labels": labels,
        "accuracy": hits / len(examples),
        "n_examples": len(examples),
        "final_loss": losses[-1],
    }
