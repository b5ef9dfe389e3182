"""Text-quality metrics: perplexity, corpus-level BLEU, distinct-n.

BLEU here is corpus-level with uniform weights over orders 1..n, clipped
counts, a brevity penalty, and add-one smoothing on orders >= 2 (order 1 is
unsmoothed, so zero unigram overlap still scores 0). Distinct-n pools
n-grams over the whole generation set.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np

from ..corpus.flatten import LM_IGNORE, flatten_dialogue
from ..corpus.types import Corpus
from ..model.config import ModelConfig
from ..model.network import Params, forward


class EvalError(ValueError):
    pass


def _ngrams(tokens: Sequence, n: int) -> list[tuple]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu_n(candidates: list[Sequence], references: list[Sequence], n: int) -> float:
    if len(candidates) != len(references):
        raise EvalError("bleu_n: candidate/reference lists must align")
    if n < 1:
        raise EvalError("bleu_n: order must be >= 1")
    matches = [0] * (n + 1)
    totals = [0] * (n + 1)
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand_len += len(cand)
        ref_len += len(ref)
        for order in range(1, n + 1):
            counts = Counter(_ngrams(cand, order))
            ref_counts = Counter(_ngrams(ref, order))
            totals[order] += max(len(cand) - order + 1, 0)
            matches[order] += sum(min(c, ref_counts[g]) for g, c in counts.items())

    log_sum = 0.0
    for order in range(1, n + 1):
        m, t = matches[order], totals[order]
        if order >= 2:
            m, t = m + 1, t + 1
        if t == 0 or m == 0:
            return 0.0
        log_sum += math.log(m / t) / n
    if cand_len == 0:
        return 0.0
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    return bp * math.exp(log_sum)


def distinct_n(candidates: list[Sequence], n: int) -> float:
    if not candidates:
        raise EvalError("distinct_n: empty generation set")
    pooled: list[tuple] = []
    for cand in candidates:
        pooled.extend(_ngrams(cand, n))
    if not pooled:
        raise EvalError(f"distinct_n: no {n}-grams in the generation set")
    return len(set(pooled)) / len(pooled)


def nll_sum(params: Params, model_cfg: ModelConfig, corpus: Corpus,
            max_len: int = 500) -> tuple[float, int]:
    """Summed NLL and token count over all response text positions."""
    total = 0.0
    count = 0
    for d in corpus.dialogues:
        seq = flatten_dialogue(d, corpus.vocab, corpus.catalog, max_len)
        keep = seq.lm_targets != LM_IGNORE
        if not keep.any():
            continue
        fo = forward(seq, params, model_cfg)
        logits = fo.lm_logits.data[keep].astype(np.float64)
        targets = seq.lm_targets[keep]
        shifted = logits - logits.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        total += float((logz - shifted[np.arange(len(targets)), targets]).sum())
        count += len(targets)
    return total, count


def perplexity(params: Params, model_cfg: ModelConfig, corpus: Corpus,
               max_len: int = 500) -> float:
    """exp(mean NLL) over response text positions, matching the training
    tokenization and supervision mask."""
    total, count = nll_sum(params, model_cfg, corpus, max_len)
    if count == 0:
        raise EvalError("perplexity: corpus has no supervised text positions")
    return math.exp(total / count)
