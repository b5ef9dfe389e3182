"""Dialogue-level corpus splitting with a hard (unseen-meme) test partition."""

from __future__ import annotations

import numpy as np

from .types import Corpus, CorpusError

SPLIT_NAMES = ("train", "valid", "easy_test", "hard_test")


def split_corpus(
    corpus: Corpus,
    seed: int,
    ratios: tuple[float, float, float, float],
    hard_meme_ids: set[int] | frozenset[int] = frozenset(),
) -> dict[str, Corpus]:
    """Split by dialogue into train/valid/easy_test/hard_test.

    Every dialogue that uses a hard-reserved meme is forced into hard_test,
    so those memes never appear in train/valid/easy_test. The remaining
    dialogues are shuffled under the seed and dealt out by the ratios
    (hard_test's ratio share gives it seen-meme dialogues on top of the
    forced ones, so it can be scored on both seen and unseen memes).
    """
    if len(ratios) != len(SPLIT_NAMES):
        raise CorpusError(f"expected {len(SPLIT_NAMES)} ratios, got {len(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"ratios must sum to 1, got {sum(ratios)}")
    hard_meme_ids = set(hard_meme_ids)

    forced: list[int] = []
    free: list[int] = []
    for i, d in enumerate(corpus.dialogues):
        uses_reserved = any(
            u.meme_id is not None and u.meme_id in hard_meme_ids for u in d.utterances
        )
        (forced if uses_reserved else free).append(i)

    order = np.random.default_rng(seed).permutation(len(free))
    shuffled = [free[int(i)] for i in order]
    n = len(shuffled)
    bounds = [int(round(n * c)) for c in np.cumsum(ratios[:-1])]
    buckets = {
        "train": shuffled[: bounds[0]],
        "valid": shuffled[bounds[0] : bounds[1]],
        "easy_test": shuffled[bounds[1] : bounds[2]],
        "hard_test": shuffled[bounds[2] :] + forced,
    }
    return {
        name: Corpus(
            dialogues=[corpus.dialogues[i] for i in indices],
            catalog=corpus.catalog,
            vocab=corpus.vocab,
            meta=dict(corpus.meta, split=name),
        )
        for name, indices in buckets.items()
    }
