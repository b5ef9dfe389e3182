"""Synthetic corpora with planted topics, for desk-scale learnability runs.

Each meme owns a latent topic, a pair (a, b) laid out on a grid (2 columns
below 9 memes, 3 from 9 up). The meme's feature vector encodes the pair
compositionally: one bump for a in the first half, one for b in the second
half, plus small noise. Every non-empty utterance of a dialogue opens with
the topic's two marker tokens, and the remaining filler tokens are
topic-agnostic, so the markers carry all topic signal. Meme usage inside a
dialogue is a deterministic function of the visible context (topic, speaker
parity, utterance index), which makes usage, retrieval, and emotion all
exactly learnable; with a 3x3 grid, a model that learns the
marker-to-feature-half correspondence can even rank memes it never saw in
training (both marginals of any held-out pair stay visible with two
different partners).
"""

from __future__ import annotations

import math

import numpy as np

from .types import MEME_GROUPS, Corpus, Dialogue, MemeCatalog, MemeEntry, Utterance
from .vocab import build_vocab

EMOTIONS = ("joy", "sad", "angry", "calm", "shy", "wow")


def topic_pair_width(n_memes: int) -> int:
    # near-square grids keep both marginals of any held-out pair visible
    # with several partners, which is what makes unseen-meme retrieval
    # learnable by composition
    return max(1, math.isqrt(n_memes))


def topic_of_meme(meme_id: int, n_memes: int) -> tuple[int, int]:
    width = topic_pair_width(n_memes)
    return meme_id // width, meme_id % width


def emotion_of_meme(meme_id: int, n_memes: int) -> str:
    a, b = topic_of_meme(meme_id, n_memes)
    return EMOTIONS[(2 * a + b) % len(EMOTIONS)]


def _has_meme(meme_id: int, parity: int, j: int) -> bool:
    # deterministic in the visible context (topic markers, speakers,
    # utterance index) so usage labels never conflict across dialogues
    if j == 1:
        return True
    return (7 * meme_id + 3 * j + parity) % 5 < 2


def _meme_only(meme_id: int, parity: int, j: int) -> bool:
    return j > 0 and (11 * meme_id + 13 * j + parity) % 7 == 0


def _topic_feature(
    meme_id: int, n_memes: int, dim: int, rng: np.random.Generator, noise: float
) -> np.ndarray:
    a, b = topic_of_meme(meme_id, n_memes)
    half = dim // 2
    base = np.zeros(dim, dtype=np.float32)
    base[a % half] = 1.0
    base[half + (b % (dim - half))] = 1.0
    return base + rng.normal(0.0, noise, size=dim).astype(np.float32)


def _utterance_words(
    meme_id: int, n_memes: int, utt_index: int, vocab_size: int
) -> list[str]:
    a, b = topic_of_meme(meme_id, n_memes)
    words = [f"topic{a}", f"mood{b}"]
    for slot in range(2 + utt_index % 3):
        words.append(f"w{(3 * utt_index + 5 * slot) % vocab_size}")
    return words


def synth_catalog(
    n_memes: int, feature_dim: int, seed: int, feature_noise: float = 0.05
) -> MemeCatalog:
    rng = np.random.default_rng(seed)
    entries = [
        MemeEntry(
            id=m,
            feature=_topic_feature(m, n_memes, feature_dim, rng, feature_noise),
            ocr_text=None,
            group=MEME_GROUPS[m % len(MEME_GROUPS)],
            emotion_tags=(emotion_of_meme(m, n_memes),),
        )
        for m in range(n_memes)
    ]
    return MemeCatalog(entries, feature_dim=feature_dim)


def synth_corpus(
    n_dialogues: int,
    n_memes: int,
    vocab_size: int,
    seed: int,
    feature_dim: int = 16,
    feature_noise: float = 0.05,
) -> Corpus:
    """Generate a corpus of n_dialogues over n_memes planted topics.

    feature_noise sets the non-compositional part of each meme feature:
    memorization can absorb it for seen memes, composition cannot predict
    it for held-out ones, which is what makes a hard split genuinely harder.
    """
    if min(n_dialogues, n_memes, vocab_size) < 1:
        raise ValueError("synth_corpus: all counts must be >= 1")
    rng = np.random.default_rng(seed)
    catalog = synth_catalog(n_memes, feature_dim, seed, feature_noise)

    # (speaker, words, meme_id, emotion) per utterance; vocab comes afterwards
    raw_dialogues: list[list[tuple[int, list[str], int | None, str | None]]] = []
    topics: list[int] = []
    for i in range(n_dialogues):
        meme_id = i % n_memes
        topics.append(meme_id)
        n_utt = int(rng.integers(4, 8))
        speaker = int(rng.integers(1, 3))
        parity = speaker - 1
        raw: list[tuple[int, list[str], int | None, str | None]] = []
        for j in range(n_utt):
            has_meme = _has_meme(meme_id, parity, j)
            meme_only = has_meme and _meme_only(meme_id, parity, j)
            words = (
                []
                if meme_only
                else _utterance_words(meme_id, n_memes, j, vocab_size)
            )
            raw.append(
                (
                    speaker,
                    words,
                    meme_id if has_meme else None,
                    emotion_of_meme(meme_id, n_memes) if has_meme else None,
                )
            )
            speaker = 3 - speaker
        raw_dialogues.append(raw)

    vocab = build_vocab((words for raw in raw_dialogues for _, words, _, _ in raw))
    dialogues = [
        Dialogue(
            tuple(
                Utterance(
                    speaker=speaker,
                    text=tuple(vocab.id_of(w) for w in words),
                    meme_id=meme_id,
                    emotion=emotion,
                )
                for speaker, words, meme_id, emotion in raw
            )
        )
        for raw in raw_dialogues
    ]
    corpus = Corpus(
        dialogues=dialogues,
        catalog=catalog,
        vocab=vocab,
        meta={"planted_topics": topics, "seed": seed},
    )
    corpus.validate()
    return corpus
