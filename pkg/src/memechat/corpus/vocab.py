"""Trainable whitespace tokenizer with character fallback for unknown words."""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path
from typing import Iterable

RESERVED = ("[pad]", "[bos]", "[eos]", "[tag]", "[speaker1]", "[speaker2]", "[meme]", "[unk]")
PAD, BOS, EOS, TAG, SPEAKER1, SPEAKER2, MEME, UNK = range(len(RESERVED))
SPEAKER_TOKENS = {1: SPEAKER1, 2: SPEAKER2}


def tokenize(text: str) -> list[str]:
    return text.split()


class Vocab:
    """Token <-> id bijection with fixed low ids for the reserved tokens."""

    def __init__(self, tokens: Iterable[str] = ()):
        self._id_to_token: list[str] = list(RESERVED)
        self._token_to_id: dict[str, int] = {t: i for i, t in enumerate(RESERVED)}
        for tok in tokens:
            self.add(tok)

    def add(self, token: str) -> int:
        existing = self._token_to_id.get(token)
        if existing is not None:
            return existing
        idx = len(self._id_to_token)
        self._id_to_token.append(token)
        self._token_to_id[token] = idx
        return idx

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id_of(self, token: str) -> int:
        return self._token_to_id.get(token, UNK)

    def token_of(self, idx: int) -> str:
        return self._id_to_token[idx]

    def encode_word(self, word: str) -> list[int]:
        """Known word -> its id; unknown word -> per-character ids, [unk] last resort."""
        idx = self._token_to_id.get(word)
        if idx is not None:
            return [idx]
        ids = [self._token_to_id.get(ch, UNK) for ch in word]
        return ids if ids else [UNK]

    def encode_text(self, text: str) -> list[int]:
        out: list[int] = []
        for word in tokenize(text):
            out.extend(self.encode_word(word))
        return out

    def decode(self, ids: Iterable[int]) -> str:
        return " ".join(self._id_to_token[i] for i in ids)

    @classmethod
    def build(cls, streams: Iterable[Iterable[str]], min_freq: int = 1) -> "Vocab":
        """Assign ids to tokens seen at least min_freq times, by (-freq, token)."""
        if min_freq < 1:
            raise ValueError(f"min_freq must be >= 1, got {min_freq}")
        freq: Counter[str] = Counter()
        for stream in streams:
            freq.update(stream)
        kept = sorted(
            (tok for tok, c in freq.items() if c >= min_freq and tok not in RESERVED),
            key=lambda tok: (-freq[tok], tok),
        )
        return cls(kept)

    def to_json(self) -> dict:
        return {
            "reserved": {tok: i for i, tok in enumerate(RESERVED)},
            "tokens": {
                tok: i
                for i, tok in enumerate(self._id_to_token)
                if i >= len(RESERVED)
            },
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Vocab":
        reserved = payload.get("reserved", {})
        for tok, i in zip(RESERVED, range(len(RESERVED))):
            if reserved.get(tok) != i:
                raise ValueError(f"vocab file: reserved token {tok!r} must map to id {i}")
        vocab = cls()
        for tok, idx in sorted(payload.get("tokens", {}).items(), key=lambda kv: kv[1]):
            assigned = vocab.add(tok)
            if assigned != idx:
                raise ValueError(f"vocab file: non-contiguous id {idx} for token {tok!r}")
        return vocab

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocab(streams: Iterable[Iterable[str]], min_freq: int = 1) -> Vocab:
    return Vocab.build(streams, min_freq)
