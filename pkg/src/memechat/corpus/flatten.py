"""Flattening dialogues into supervised model-input sequences.

Per-utterance layout:

    [speakerK] [bos] w_1 ... w_L [eos] [tag] ([meme] when a meme is attached)

Every position of an utterance carries its speaker's segment id except the
[meme] slot, which carries the meme segment. Next-token supervision runs
from [bos] through w_L (so the model learns to emit the words and the
closing [eos]); the structural [speakerK]/[bos]/[tag]/[meme] tokens are
never generation targets. Sequences longer than max_len are left-truncated
at utterance boundaries so no supervision target is orphaned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .types import CorpusError, Dialogue, MemeCatalog, Utterance
from .vocab import BOS, EOS, MEME, SPEAKER_TOKENS, TAG, Vocab

SEG_TEXT, SEG_MEME, SEG_USER1, SEG_USER2 = range(4)
SPEAKER_SEGMENTS = {1: SEG_USER1, 2: SEG_USER2}
LM_IGNORE = -1


@dataclass(frozen=True)
class MemeSlot:
    pos: int
    meme_id: int
    feature: np.ndarray


@dataclass(frozen=True)
class TagSite:
    pos: int
    utt_index: int
    y: int
    meme_id: int | None
    feature: np.ndarray | None
    emotion: str | None
    supervised: bool


@dataclass
class TokenSequence:
    token_ids: np.ndarray
    segment_ids: np.ndarray
    positions: np.ndarray
    lm_targets: np.ndarray
    meme_slots: list[MemeSlot]
    tags: list[TagSite]
    n_utterances: int
    first_utt_index: int

    def __len__(self) -> int:
        return int(self.token_ids.shape[0])

    @property
    def supervised_tags(self) -> list[TagSite]:
        return [t for t in self.tags if t.supervised]

    def n_lm_targets(self) -> int:
        return int((self.lm_targets != LM_IGNORE).sum())


def utterance_chunk(u: Utterance) -> tuple[list[int], list[int], int | None]:
    """Token ids and segment ids for one utterance; returns the [meme] offset."""
    seg = SPEAKER_SEGMENTS[u.speaker]
    tokens = [SPEAKER_TOKENS[u.speaker], BOS, *u.text, EOS, TAG]
    segments = [seg] * len(tokens)
    meme_offset = None
    if u.meme_id is not None:
        meme_offset = len(tokens)
        tokens.append(MEME)
        segments.append(SEG_MEME)
    return tokens, segments, meme_offset


def flatten_utterances(
    utterances: Sequence[Utterance],
    vocab: Vocab,
    catalog: MemeCatalog,
    max_len: int,
    supervise_from: int | None = 1,
) -> TokenSequence:
    """Flatten utterances into one sequence, supervising indices >= supervise_from.

    supervise_from is a 0-based utterance index (1 supervises every response,
    i.e. all utterances after the opener); None disables supervision, which
    is what inference-time history encoding uses.
    """
    if max_len < 8:
        raise CorpusError(f"max_len must be >= 8, got {max_len}")
    chunks = [utterance_chunk(u) for u in utterances]
    lengths = [len(tokens) for tokens, _, _ in chunks]

    start = 0
    total = sum(lengths)
    while total > max_len and start < len(chunks):
        total -= lengths[start]
        start += 1
    if start >= len(chunks):
        raise CorpusError(
            f"no complete utterance fits in max_len={max_len} "
            f"(shortest candidate needs {lengths[-1]} positions)"
        )

    token_ids: list[int] = []
    segment_ids: list[int] = []
    meme_slots: list[MemeSlot] = []
    tags: list[TagSite] = []
    lm_targets: list[int] = []

    for utt_index in range(start, len(chunks)):
        u = utterances[utt_index]
        tokens, segments, meme_offset = chunks[utt_index]
        base = len(token_ids)
        token_ids.extend(tokens)
        segment_ids.extend(segments)
        lm_targets.extend([LM_IGNORE] * len(tokens))

        supervised = supervise_from is not None and utt_index >= supervise_from
        if supervised:
            # bos + L text tokens predict w_1 ... w_L, [eos]
            for offset in range(1, 2 + len(u.text)):
                lm_targets[base + offset] = tokens[offset + 1]

        tag_pos = base + 2 + len(u.text) + 1
        feature = catalog.get(u.meme_id).feature if u.meme_id is not None else None
        tags.append(
            TagSite(
                pos=tag_pos,
                utt_index=utt_index,
                y=int(u.meme_id is not None),
                meme_id=u.meme_id,
                feature=feature,
                emotion=u.emotion,
                supervised=supervised,
            )
        )
        if meme_offset is not None:
            meme_slots.append(MemeSlot(base + meme_offset, u.meme_id, feature))

    n = len(token_ids)
    return TokenSequence(
        token_ids=np.asarray(token_ids, dtype=np.int64),
        segment_ids=np.asarray(segment_ids, dtype=np.int64),
        positions=np.arange(n, dtype=np.int64),
        lm_targets=np.asarray(lm_targets, dtype=np.int64),
        meme_slots=meme_slots,
        tags=tags,
        n_utterances=len(chunks) - start,
        first_utt_index=start,
    )


def flatten_dialogue(
    d: Dialogue,
    vocab: Vocab,
    catalog: MemeCatalog,
    max_len: int,
    supervise_from: int | None = 1,
) -> TokenSequence:
    return flatten_utterances(d.utterances, vocab, catalog, max_len, supervise_from)


def make_examples(
    d: Dialogue, vocab: Vocab, catalog: MemeCatalog, max_len: int
) -> list[TokenSequence]:
    """One training example per response position: a dialogue of N utterances
    yields N-1 sequences, each supervising only its final utterance."""
    return [
        flatten_utterances(d.utterances[: i + 1], vocab, catalog, max_len, supervise_from=i)
        for i in range(1, len(d.utterances))
    ]


def unflatten(seq: TokenSequence) -> list[tuple[int, tuple[int, ...], int | None]]:
    """Recover (speaker, text token ids, meme id) triples from a flat sequence."""
    slots = {s.pos: s.meme_id for s in seq.meme_slots}
    speakers = {v: k for k, v in SPEAKER_TOKENS.items()}
    out: list[tuple[int, tuple[int, ...], int | None]] = []
    i = 0
    ids = seq.token_ids
    n = len(ids)
    while i < n:
        if ids[i] not in speakers or i + 1 >= n or ids[i + 1] != BOS:
            raise CorpusError(f"malformed sequence at position {i}")
        speaker = speakers[int(ids[i])]
        i += 2
        text: list[int] = []
        while i < n and ids[i] != EOS:
            text.append(int(ids[i]))
            i += 1
        if i >= n or i + 1 >= n or ids[i + 1] != TAG:
            raise CorpusError("malformed sequence: missing [eos][tag]")
        i += 2
        meme_id = None
        if i < n and ids[i] == MEME:
            meme_id = slots[i]
            i += 1
        out.append((speaker, tuple(text), meme_id))
    return out
