from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ModelConfig, param_count
from .network import (
    ForwardOutput,
    Params,
    embed_sequence,
    emotion_head,
    forward,
    init_params,
    mean_last_layer_attention,
    regress_head,
    usage_head,
)
