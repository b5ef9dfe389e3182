from .pipeline import (
    MASKED_TOKEN_IDS,
    Response,
    RetrievalError,
    TurnTrace,
    build_tag_sequence,
    decide_and_retrieve,
    generate_text,
    rank_candidates,
    respond,
)
from .sampler import SamplerConfig, nucleus_sample, nucleus_support, temperature_softmax
