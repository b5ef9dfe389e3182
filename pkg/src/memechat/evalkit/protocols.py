"""Retrieval, usage, and emotion evaluation protocols over response turns.

A "turn" is a response position: dialogue utterance i >= 1 evaluated with
the gold history before it and the gold response text (teacher forcing).
Retrieval scores only turns whose gold response carries a meme.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..corpus.flatten import flatten_utterances
from ..corpus.types import Corpus, Dialogue
from ..decoding.pipeline import decide_and_retrieve, rank_candidates
from ..model.config import ModelConfig
from ..model.network import Params, forward
from ..numerics import derive_seed
from .metrics import EvalError

RankFn = Callable[[int, list[int]], list[int]]


def response_turns(corpus: Corpus, memes_only: bool = False):
    """Yield (dialogue, response index) pairs in corpus order."""
    for d in corpus.dialogues:
        for i in range(1, len(d.utterances)):
            if memes_only and d.utterances[i].meme_id is None:
                continue
            yield d, i


def _turn_regression(
    d: Dialogue, i: int, params: Params, model_cfg: ModelConfig, corpus: Corpus,
    max_len: int,
) -> tuple[float, np.ndarray]:
    """(usage probability, regressed feature) at the gold-text response tag."""
    u = d.utterances[i]
    usage_prob, _, trace = decide_and_retrieve(
        d.utterances[:i],
        u.speaker,
        list(u.text),
        params,
        model_cfg,
        corpus.catalog,
        candidate_ids=[],
        threshold=2.0,  # never "fires": we only want the tag statistics here
        max_len=max_len,
    )
    return usage_prob, trace.regressed


def recall_core(
    gold_ids: list[int],
    rank_fn: RankFn,
    catalog_ids: list[int],
    n: int | None,
    k: int,
    seed: int,
) -> float:
    """Fraction of turns whose gold meme lands in the top-k of the ranking.

    n candidates = the gold + (n-1) seed-sampled distractors; n=None ranks
    the whole catalog.
    """
    if not gold_ids:
        raise EvalError("recall: no meme-ending turns to score")
    if n is not None and n > len(catalog_ids):
        raise EvalError(f"recall: n={n} exceeds catalog size {len(catalog_ids)}")
    rng = np.random.default_rng(derive_seed(seed, 5))
    hits = 0
    for turn_idx, gold in enumerate(gold_ids):
        if n is None:
            candidates = list(catalog_ids)
        else:
            others = [m for m in catalog_ids if m != gold]
            picked = rng.choice(len(others), size=n - 1, replace=False)
            candidates = [gold] + [others[int(j)] for j in picked]
        ranked = rank_fn(turn_idx, candidates)
        hits += gold in ranked[:k]
    return hits / len(gold_ids)


def recall_at_k(
    params: Params,
    model_cfg: ModelConfig,
    corpus: Corpus,
    n: int | None,
    k: int,
    seed: int,
    max_len: int = 500,
) -> float:
    """Model-ranked recall over the corpus's meme-ending response turns."""
    turns = list(response_turns(corpus, memes_only=True))
    gold_ids = [d.utterances[i].meme_id for d, i in turns]
    g_vecs = [
        _turn_regression(d, i, params, model_cfg, corpus, max_len)[1] for d, i in turns
    ]

    def rank_fn(turn_idx: int, candidates: list[int]) -> list[int]:
        ranked = rank_candidates(g_vecs[turn_idx], candidates, corpus.catalog)
        return [meme_id for meme_id, _ in ranked]

    return recall_core(gold_ids, rank_fn, corpus.catalog.ids, n, k, seed)


def usage_accuracy(
    params: Params,
    model_cfg: ModelConfig,
    corpus: Corpus,
    threshold: float = 0.5,
    max_len: int = 500,
) -> float:
    """Fraction of response turns whose meme-or-not decision is correct."""
    turns = list(response_turns(corpus))
    if not turns:
        raise EvalError("usage_accuracy: corpus has no response turns")
    hits = 0
    for d, i in turns:
        prob, _ = _turn_regression(d, i, params, model_cfg, corpus, max_len)
        hits += (prob >= threshold) == (d.utterances[i].meme_id is not None)
    return hits / len(turns)


def emotion_accuracy(
    params: Params,
    model_cfg: ModelConfig,
    corpus: Corpus,
    labels: Sequence[str],
    top_k: int = 1,
    max_len: int = 500,
) -> float:
    """Top-k accuracy of the emotion head over labelled meme turns."""
    index = {label: i for i, label in enumerate(labels)}
    scored = 0
    hits = 0
    for d, i in response_turns(corpus, memes_only=True):
        u = d.utterances[i]
        if u.emotion is None or u.emotion not in index:
            continue
        seq = flatten_utterances(
            d.utterances[: i + 1], corpus.vocab, corpus.catalog, max_len,
            supervise_from=i,
        )
        fo = forward(seq, params, model_cfg)
        row = fo.emotion_logits.data[-1]
        top = np.argsort(-row, kind="stable")[:top_k]
        hits += index[u.emotion] in top
        scored += 1
    if scored == 0:
        raise EvalError("emotion_accuracy: no labelled meme turns")
    return hits / scored


def seen_unseen_breakdown(
    params: Params,
    model_cfg: ModelConfig,
    corpus: Corpus,
    train_meme_ids: set[int],
    n: int | None,
    k: int,
    seed: int,
    max_len: int = 500,
) -> dict[str, dict]:
    """Recall split by whether the gold meme appeared in the training set."""
    turns = list(response_turns(corpus, memes_only=True))
    partitions: dict[str, list[tuple[Dialogue, int]]] = {"seen": [], "unseen": []}
    for d, i in turns:
        part = "seen" if d.utterances[i].meme_id in train_meme_ids else "unseen"
        partitions[part].append((d, i))

    out: dict[str, dict] = {}
    for name, part_turns in partitions.items():
        if not part_turns:
            continue
        gold_ids = [d.utterances[i].meme_id for d, i in part_turns]
        g_vecs = [
            _turn_regression(d, i, params, model_cfg, corpus, max_len)[1]
            for d, i in part_turns
        ]

        def rank_fn(turn_idx: int, candidates: list[int]) -> list[int]:
            ranked = rank_candidates(g_vecs[turn_idx], candidates, corpus.catalog)
            return [meme_id for meme_id, _ in ranked]

        score = recall_core(gold_ids, rank_fn, corpus.catalog.ids, n, k, seed)
        out[name] = {"recall": score, "turns": len(part_turns)}
    return out
