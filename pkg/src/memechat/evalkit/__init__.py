from .metrics import EvalError, bleu_n, distinct_n, nll_sum, perplexity
from .protocols import (
    emotion_accuracy,
    recall_at_k,
    recall_core,
    response_turns,
    seen_unseen_breakdown,
    usage_accuracy,
)
from .report import BLEU_VARIANT, EvalConfig, EvalReport, evaluate_model, generate_responses
