from .loop import TrainResult, build_examples, train
from .losses import LossBreakdown, TrainConfig, compute_losses
from .pretrain import (
    PretrainError,
    classify_meme_groups,
    emotion_examples,
    install_projection,
    pretrain_emotion,
    pretrain_meme_features,
    select_emotion_labels,
)
