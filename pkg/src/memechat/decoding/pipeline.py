"""Inference pipeline: generate the text reply, decide whether a meme goes
with it, and retrieve the meme by feature-space distance — in that order,
so the usage/retrieval decision is conditioned on the generated text."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..corpus.flatten import (
    LM_IGNORE,
    SPEAKER_SEGMENTS,
    MemeSlot,
    TagSite,
    TokenSequence,
    utterance_chunk,
)
from ..corpus.types import CorpusError, MemeCatalog, Utterance
from ..corpus.vocab import BOS, EOS, MEME, PAD, SPEAKER_TOKENS, TAG, UNK
from ..model.config import ModelConfig
from ..model.network import Params, forward, mean_last_layer_attention
from ..numerics import derive_seed
from .sampler import SamplerConfig, nucleus_sample

# tokens the sampler must never emit as text; [eos] stays legal as the stop
MASKED_TOKEN_IDS = (PAD, BOS, TAG, *SPEAKER_TOKENS.values(), MEME, UNK)
MASK_VALUE = -1e30


class RetrievalError(ValueError):
    pass


@dataclass(frozen=True)
class Response:
    text: tuple[int, ...]
    meme_id: int | None
    usage_prob: float
    ranked_memes: tuple[tuple[int, float], ...]

    def __post_init__(self):
        dists = [d for _, d in self.ranked_memes]
        if dists != sorted(dists):
            raise RetrievalError("ranked_memes must ascend by distance")


@dataclass
class TurnTrace:
    """Introspection payload for a completed turn (service/UI consumption)."""

    token_ids: np.ndarray
    tag_pos: int
    attention: np.ndarray
    regressed: np.ndarray
    stages: tuple[str, ...]


def _history_arrays(
    history: Sequence[Utterance], max_len: int
) -> tuple[list[int], list[int], list[MemeSlot]]:
    chunks = [utterance_chunk(u) for u in history]
    lengths = [len(t) for t, _, _ in chunks]
    start = 0
    total = sum(lengths)
    while total > max_len and start < len(chunks):
        total -= lengths[start]
        start += 1
    tokens: list[int] = []
    segments: list[int] = []
    slots: list[MemeSlot] = []
    for i in range(start, len(chunks)):
        t, s, meme_offset = chunks[i]
        if meme_offset is not None:
            u = history[i]
            slots.append(MemeSlot(len(tokens) + meme_offset, u.meme_id, None))
        tokens.extend(t)
        segments.extend(s)
    return tokens, segments, slots


def _resolve_slots(slots: list[MemeSlot], catalog: MemeCatalog) -> list[MemeSlot]:
    return [
        MemeSlot(s.pos, s.meme_id, catalog.get(s.meme_id).feature) for s in slots
    ]


def _sequence(tokens, segments, slots, tags=()) -> TokenSequence:
    n = len(tokens)
    return TokenSequence(
        token_ids=np.asarray(tokens, dtype=np.int64),
        segment_ids=np.asarray(segments, dtype=np.int64),
        positions=np.arange(n, dtype=np.int64),
        lm_targets=np.full(n, LM_IGNORE, dtype=np.int64),
        meme_slots=list(slots),
        tags=list(tags),
        n_utterances=0,
        first_utt_index=0,
    )


def build_tag_sequence(
    history: Sequence[Utterance],
    speaker: int,
    text_ids: Sequence[int],
    catalog: MemeCatalog,
    max_len: int,
) -> TokenSequence:
    """History + [speakerK][bos] text [eos][tag], truncated to fit max_len."""
    resp_tokens = [SPEAKER_TOKENS[speaker], BOS, *text_ids, EOS, TAG]
    budget = max_len - len(resp_tokens)
    if budget < 0:
        raise CorpusError("response alone exceeds max_len")
    tokens, segments, slots = _history_arrays(history, budget)
    slots = _resolve_slots(slots, catalog)
    base = len(tokens)
    tokens.extend(resp_tokens)
    segments.extend([SPEAKER_SEGMENTS[speaker]] * len(resp_tokens))
    tag = TagSite(
        pos=len(tokens) - 1,
        utt_index=len(history),
        y=0,
        meme_id=None,
        feature=None,
        emotion=None,
        supervised=False,
    )
    return _sequence(tokens, segments, slots, tags=(tag,))


def generate_text(
    history: Sequence[Utterance],
    speaker: int,
    params: Params,
    model_cfg: ModelConfig,
    catalog: MemeCatalog,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> list[int]:
    """Sample response tokens after [speakerK][bos] until [eos] or budget.

    Structural tokens are masked out of the logits, so generated text is
    always plain vocabulary; an immediate [eos] (empty text) is legal.
    """
    budget = model_cfg.max_positions - cfg.max_new_tokens - 3
    if budget < 0:
        raise CorpusError("max_new_tokens leaves no room for the response frame")
    tokens, segments, slots = _history_arrays(history, budget)
    slots = _resolve_slots(slots, catalog)
    seg = SPEAKER_SEGMENTS[speaker]
    tokens += [SPEAKER_TOKENS[speaker], BOS]
    segments += [seg, seg]

    out: list[int] = []
    for _ in range(cfg.max_new_tokens):
        seq = _sequence(tokens, segments, slots)
        fo = forward(seq, params, model_cfg)
        logits = np.array(fo.lm_logits.data[-1], dtype=np.float64)
        logits[list(MASKED_TOKEN_IDS)] = MASK_VALUE
        token = nucleus_sample(logits, cfg, rng)
        if token == EOS:
            break
        tokens.append(token)
        segments.append(seg)
        out.append(token)
    return out


def rank_candidates(
    g_vec: np.ndarray, candidate_ids: Sequence[int], catalog: MemeCatalog
) -> list[tuple[int, float]]:
    """Candidates by ascending L2 distance to the regressed feature; ties
    break toward the smaller id."""
    ranked = sorted(
        (float(np.linalg.norm(catalog.get(i).feature - g_vec)), int(i))
        for i in candidate_ids
    )
    return [(i, d) for d, i in ranked]


def decide_and_retrieve(
    history: Sequence[Utterance],
    speaker: int,
    text_ids: Sequence[int],
    params: Params,
    model_cfg: ModelConfig,
    catalog: MemeCatalog,
    candidate_ids: Sequence[int] | None = None,
    threshold: float = 0.5,
    k: int = 5,
    max_len: int | None = None,
    on_stage: Callable[[str], None] | None = None,
) -> tuple[float, list[tuple[int, float]], TurnTrace]:
    """Usage probability at the response [tag], plus the top-k candidate
    ranking by feature distance."""
    max_len = max_len or model_cfg.max_positions
    seq = build_tag_sequence(history, speaker, text_ids, catalog, max_len)
    fo = forward(seq, params, model_cfg)
    tag_pos = seq.tags[-1].pos

    if on_stage:
        on_stage("usage_decision")
    logits = fo.usage_logits.data[-1].astype(np.float64)
    z = logits - logits.max()
    e = np.exp(z)
    usage_prob = float(e[1] / e.sum())

    if on_stage:
        on_stage("retrieval")
    if candidate_ids is None:
        candidate_ids = catalog.ids
    if not candidate_ids:
        if usage_prob >= threshold:
            raise RetrievalError("usage fired but the candidate set is empty")
        ranked: list[tuple[int, float]] = []
    else:
        ranked = rank_candidates(fo.regress.data[-1], candidate_ids, catalog)[:k]

    trace = TurnTrace(
        token_ids=np.array(seq.token_ids[: tag_pos + 1]),
        tag_pos=tag_pos,
        attention=mean_last_layer_attention(fo, tag_pos)[: tag_pos + 1],
        regressed=np.array(fo.regress.data[-1], dtype=np.float64),
        stages=(),
    )
    return usage_prob, ranked, trace


def respond(
    history: Sequence[Utterance],
    params: Params,
    model_cfg: ModelConfig,
    catalog: MemeCatalog,
    sampler: SamplerConfig,
    threshold: float = 0.5,
    k: int = 5,
    max_len: int | None = None,
    on_stage: Callable[[str], None] | None = None,
) -> tuple[Response, TurnTrace]:
    """Run the full three-stage pipeline for the next turn of a dialogue."""
    if not history:
        raise CorpusError("respond: history must contain at least one utterance")
    speaker = 3 - history[-1].speaker
    rng = np.random.default_rng(derive_seed(sampler.seed, 17))

    stages: list[str] = []

    def note(stage: str) -> None:
        stages.append(stage)
        if on_stage:
            on_stage(stage)

    note("generate_text")
    text = generate_text(history, speaker, params, model_cfg, catalog, sampler, rng)
    usage_prob, ranked, trace = decide_and_retrieve(
        history,
        speaker,
        text,
        params,
        model_cfg,
        catalog,
        threshold=threshold,
        k=k,
        max_len=max_len,
        on_stage=note,
    )
    meme_id = ranked[0][0] if usage_prob >= threshold and ranked else None
    if usage_prob >= threshold and not ranked:
        raise RetrievalError("usage fired but no candidates were ranked")
    trace.stages = tuple(stages)
    return (
        Response(
            text=tuple(text),
            meme_id=meme_id,
            usage_prob=usage_prob,
            ranked_memes=tuple(ranked),
        ),
        trace,
    )
