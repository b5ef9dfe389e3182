"""Architecture configuration and the closed-form parameter count."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 256
    max_positions: int = 512
    meme_feat_dim: int = 16
    n_emotions: int = 6
    dropout_p: float = 0.1
    n_segments: int = 4
    head_hidden: int = 0  # 0 -> use d_model
    emotion_labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model {self.d_model} not divisible by n_heads {self.n_heads}"
            )
        if self.emotion_labels and len(self.emotion_labels) != self.n_emotions:
            raise ValueError("emotion_labels length must equal n_emotions")
        object.__setattr__(self, "emotion_labels", tuple(self.emotion_labels))

    @property
    def hidden(self) -> int:
        return self.head_hidden or self.d_model

    def to_json(self) -> dict:
        payload = asdict(self)
        payload["emotion_labels"] = list(self.emotion_labels)
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "ModelConfig":
        payload = dict(payload)
        payload["emotion_labels"] = tuple(payload.get("emotion_labels", ()))
        return cls(**payload)


def param_count(cfg: ModelConfig) -> int:
    """Total scalar parameters as a function of the config.

    embeddings: V*d + P*d + S*d
    meme projection: Dm*d + d
    per layer: 2 layernorms (4d) + qkv (3d^2 + 3d) + attn out (d^2 + d)
               + mlp (d*f + f + f*d + d)
    final layernorm: 2d
    lm head: d*V + V
    each of the 3 MLP heads (usage 2, regression Dm, emotion E outputs):
               d*h + h + h*out + out
    """
    d, f, h = cfg.d_model, cfg.d_ff, cfg.hidden
    n = cfg.vocab_size * d + cfg.max_positions * d + cfg.n_segments * d
    n += cfg.meme_feat_dim * d + d
    per_layer = 4 * d + (3 * d * d + 3 * d) + (d * d + d) + (2 * d * f + f + d)
    n += cfg.n_layers * per_layer
    n += 2 * d
    n += d * cfg.vocab_size + cfg.vocab_size
    for out in (2, cfg.meme_feat_dim, cfg.n_emotions):
        n += d * h + h + h * out + out
    return n
