"""Causal transformer decoder with meme-aware embeddings and the three
tag-position heads (usage, meme-feature regression, emotion)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..corpus.flatten import TokenSequence
from ..numerics import (
    RngStream,
    ShapeError,
    Tensor,
    add,
    dropout,
    embedding_gather,
    gelu,
    layernorm,
    linear,
    matmul,
    mul,
    relu,
    reshape,
    slice_axis,
    softmax,
    transpose,
)
from .config import ModelConfig

Params = dict[str, Tensor]


@dataclass
class ForwardOutput:
    hidden: Tensor  # (T, d_model)
    lm_logits: Tensor  # (T, vocab)
    tag_positions: np.ndarray  # (n_tags,)
    usage_logits: Tensor  # (n_tags, 2)
    regress: Tensor  # (n_tags, meme_feat_dim)
    emotion_logits: Tensor  # (n_tags, n_emotions)
    attn_last: np.ndarray  # (n_heads, T, T), pre-dropout probabilities


def init_params(cfg: ModelConfig, seed: int, dtype=np.float32) -> Params:
    rng = np.random.default_rng(seed)
    d, f, h = cfg.d_model, cfg.d_ff, cfg.hidden

    def w(*shape):
        return Tensor(rng.normal(0.0, 0.02, size=shape), requires_grad=True, dtype=dtype)

    def zeros(*shape):
        return Tensor(np.zeros(shape), requires_grad=True, dtype=dtype)

    def ones(*shape):
        return Tensor(np.ones(shape), requires_grad=True, dtype=dtype)

    p: Params = {
        "tok_emb": w(cfg.vocab_size, d),
        "pos_emb": w(cfg.max_positions, d),
        "seg_emb": w(cfg.n_segments, d),
        "meme_proj.w": w(cfg.meme_feat_dim, d),
        "meme_proj.b": zeros(d),
    }
    for i in range(cfg.n_layers):
        p[f"layers.{i}.ln1.g"] = ones(d)
        p[f"layers.{i}.ln1.b"] = zeros(d)
        p[f"layers.{i}.attn.wqkv"] = w(d, 3 * d)
        p[f"layers.{i}.attn.bqkv"] = zeros(3 * d)
        p[f"layers.{i}.attn.wo"] = w(d, d)
        p[f"layers.{i}.attn.bo"] = zeros(d)
        p[f"layers.{i}.ln2.g"] = ones(d)
        p[f"layers.{i}.ln2.b"] = zeros(d)
        p[f"layers.{i}.mlp.w1"] = w(d, f)
        p[f"layers.{i}.mlp.b1"] = zeros(f)
        p[f"layers.{i}.mlp.w2"] = w(f, d)
        p[f"layers.{i}.mlp.b2"] = zeros(d)
    p["ln_f.g"] = ones(d)
    p["ln_f.b"] = zeros(d)
    p["lm_head.w"] = w(d, cfg.vocab_size)
    p["lm_head.b"] = zeros(cfg.vocab_size)
    for name, out in (("usage", 2), ("regress", cfg.meme_feat_dim), ("emotion", cfg.n_emotions)):
        p[f"{name}.w1"] = w(d, h)
        p[f"{name}.b1"] = zeros(h)
        p[f"{name}.w2"] = w(h, out)
        p[f"{name}.b2"] = zeros(out)
    return p


def embed_sequence(seq: TokenSequence, params: Params, cfg: ModelConfig) -> Tensor:
    """Token/meme embedding + position embedding + segment embedding.

    Meme slots use the projected catalog feature in place of the token table
    row; the [meme] token row never contributes.
    """
    n = len(seq)
    if n == 0:
        raise ShapeError("embed_sequence: empty sequence")
    if int(seq.positions.max()) >= cfg.max_positions:
        raise ShapeError(
            f"position {int(seq.positions.max())} exceeds max_positions {cfg.max_positions}"
        )
    tok = embedding_gather(params["tok_emb"], seq.token_ids)
    x = tok
    if seq.meme_slots:
        dtype = params["tok_emb"].dtype
        feats = Tensor(np.stack([s.feature for s in seq.meme_slots]), dtype=dtype)
        proj = linear(feats, params["meme_proj.w"], params["meme_proj.b"])
        keep = np.ones((n, cfg.d_model), dtype=dtype)
        scatter = np.zeros((n, len(seq.meme_slots)), dtype=dtype)
        for j, slot in enumerate(seq.meme_slots):
            keep[slot.pos, :] = 0.0
            scatter[slot.pos, j] = 1.0
        x = add(mul(tok, Tensor(keep)), matmul(Tensor(scatter), proj))
    x = add(x, embedding_gather(params["pos_emb"], seq.positions))
    return add(x, embedding_gather(params["seg_emb"], seq.segment_ids))


def _causal_mask(n: int, dtype) -> Tensor:
    mask = np.zeros((n, n), dtype=dtype)
    mask[np.triu_indices(n, k=1)] = -np.inf
    return Tensor(mask)


def _mlp_head(prefix: str, params: Params, h_tag: Tensor, cfg: ModelConfig,
              train: bool = False, rng: RngStream | None = None) -> Tensor:
    hidden = relu(linear(h_tag, params[f"{prefix}.w1"], params[f"{prefix}.b1"]))
    hidden = dropout(hidden, cfg.dropout_p, train, rng)
    return linear(hidden, params[f"{prefix}.w2"], params[f"{prefix}.b2"])


def usage_head(params: Params, h_tag: Tensor, cfg: ModelConfig, **kw) -> Tensor:
    return _mlp_head("usage", params, h_tag, cfg, **kw)


def regress_head(params: Params, h_tag: Tensor, cfg: ModelConfig, **kw) -> Tensor:
    return _mlp_head("regress", params, h_tag, cfg, **kw)


def emotion_head(params: Params, h_tag: Tensor, cfg: ModelConfig, **kw) -> Tensor:
    return _mlp_head("emotion", params, h_tag, cfg, **kw)


def forward(
    seq: TokenSequence,
    params: Params,
    cfg: ModelConfig,
    train: bool = False,
    rng: RngStream | None = None,
) -> ForwardOutput:
    """Full forward pass; strictly causal, heads evaluated at tag positions."""
    n = len(seq)
    d, nh = cfg.d_model, cfg.n_heads
    dh = d // nh
    x = embed_sequence(seq, params, cfg)
    x = dropout(x, cfg.dropout_p, train, rng)
    mask = _causal_mask(n, x.dtype)
    scale = 1.0 / math.sqrt(dh)
    attn_last: np.ndarray | None = None

    for i in range(cfg.n_layers):
        pre = f"layers.{i}"
        y = layernorm(x, params[f"{pre}.ln1.g"], params[f"{pre}.ln1.b"])
        qkv = linear(y, params[f"{pre}.attn.wqkv"], params[f"{pre}.attn.bqkv"])
        q, k, v = (
            transpose(reshape(slice_axis(qkv, 1, j * d, (j + 1) * d), (n, nh, dh)), (1, 0, 2))
            for j in range(3)
        )
        scores = add(mul(matmul(q, transpose(k, (0, 2, 1))), scale), mask)
        probs = softmax(scores, axis=-1)
        if i == cfg.n_layers - 1:
            attn_last = np.array(probs.data, copy=True)
        ctx = matmul(dropout(probs, cfg.dropout_p, train, rng), v)
        ctx = reshape(transpose(ctx, (1, 0, 2)), (n, d))
        attn_out = linear(ctx, params[f"{pre}.attn.wo"], params[f"{pre}.attn.bo"])
        x = add(x, dropout(attn_out, cfg.dropout_p, train, rng))

        y2 = layernorm(x, params[f"{pre}.ln2.g"], params[f"{pre}.ln2.b"])
        h1 = gelu(linear(y2, params[f"{pre}.mlp.w1"], params[f"{pre}.mlp.b1"]))
        h1 = dropout(h1, cfg.dropout_p, train, rng)
        out = linear(h1, params[f"{pre}.mlp.w2"], params[f"{pre}.mlp.b2"])
        x = add(x, dropout(out, cfg.dropout_p, train, rng))

    hidden = layernorm(x, params["ln_f.g"], params["ln_f.b"])
    lm_logits = linear(hidden, params["lm_head.w"], params["lm_head.b"])

    tag_positions = np.asarray([t.pos for t in seq.tags], dtype=np.int64)
    h_tag = embedding_gather(hidden, tag_positions)
    return ForwardOutput(
        hidden=hidden,
        lm_logits=lm_logits,
        tag_positions=tag_positions,
        usage_logits=usage_head(params, h_tag, cfg, train=train, rng=rng),
        regress=regress_head(params, h_tag, cfg, train=train, rng=rng),
        emotion_logits=emotion_head(params, h_tag, cfg, train=train, rng=rng),
        attn_last=attn_last,
    )


def mean_last_layer_attention(out: ForwardOutput, tag_pos: int) -> np.ndarray:
    """Head-averaged last-layer attention row at a tag position."""
    n = out.attn_last.shape[-1]
    if not 0 <= tag_pos < n:
        raise IndexError(f"tag position {tag_pos} out of range for length {n}")
    return out.attn_last[:, tag_pos, :].mean(axis=0)
