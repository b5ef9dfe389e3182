"""Immutable data model for meme-bearing multi-turn dialogues."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .vocab import Vocab

MEME_GROUPS = (
    "atmosphere_adjustment",
    "basic_expression",
    "basic_emotion",
    "common_semantics",
)


class CorpusError(ValueError):
    """Schema or invariant violation in corpus data."""


@dataclass(frozen=True)
class MemeEntry:
    id: int
    feature: np.ndarray
    ocr_text: str | None = None
    group: str = "common_semantics"
    emotion_tags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.id < 0:
            raise CorpusError(f"meme id must be >= 0, got {self.id}")
        if self.group not in MEME_GROUPS:
            raise CorpusError(f"unknown meme group {self.group!r}")
        feat = np.asarray(self.feature, dtype=np.float32)
        object.__setattr__(self, "feature", feat)
        if feat.ndim != 1:
            raise CorpusError(f"meme {self.id}: feature must be a vector")


class MemeCatalog:
    """Meme inventory with a catalog-wide feature dimension and unique ids."""

    def __init__(self, entries: list[MemeEntry], feature_dim: int | None = None):
        if feature_dim is None:
            if not entries:
                raise CorpusError("empty catalog needs an explicit feature_dim")
            feature_dim = entries[0].feature.shape[0]
        self.feature_dim = int(feature_dim)
        self._by_id: dict[int, MemeEntry] = {}
        for e in entries:
            if e.feature.shape[0] != self.feature_dim:
                raise CorpusError(
                    f"meme {e.id}: feature length {e.feature.shape[0]} != catalog dim {self.feature_dim}"
                )
            if e.id in self._by_id:
                raise CorpusError(f"duplicate meme id {e.id}")
            self._by_id[e.id] = e

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self) -> Iterator[MemeEntry]:
        return iter(self._by_id.values())

    def __contains__(self, meme_id: int) -> bool:
        return meme_id in self._by_id

    @property
    def ids(self) -> list[int]:
        return list(self._by_id)

    def get(self, meme_id: int) -> MemeEntry:
        entry = self._by_id.get(meme_id)
        if entry is None:
            raise CorpusError(f"unknown meme id {meme_id}")
        return entry

    def features(self, ids: list[int]) -> np.ndarray:
        return np.stack([self.get(i).feature for i in ids]) if ids else np.zeros(
            (0, self.feature_dim), dtype=np.float32
        )


@dataclass(frozen=True)
class Utterance:
    speaker: int
    text: tuple[int, ...] = ()
    meme_id: int | None = None
    emotion: str | None = None

    def __post_init__(self):
        if self.speaker not in (1, 2):
            raise CorpusError(f"speaker must be 1 or 2, got {self.speaker}")
        object.__setattr__(self, "text", tuple(int(t) for t in self.text))
        if not self.text and self.meme_id is None:
            raise CorpusError("utterance must carry text or a meme (or both)")
        if self.emotion is not None and self.meme_id is None:
            raise CorpusError("emotion label requires a meme")


@dataclass(frozen=True)
class Dialogue:
    utterances: tuple[Utterance, ...]

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        if len(self.utterances) < 2:
            raise CorpusError("dialogue needs at least 2 utterances")
        for prev, cur in zip(self.utterances, self.utterances[1:]):
            if prev.speaker == cur.speaker:
                raise CorpusError("speakers must alternate")
        if all(u.meme_id is None for u in self.utterances):
            raise CorpusError("dialogue carries no meme")

    def __len__(self) -> int:
        return len(self.utterances)


@dataclass
class Corpus:
    dialogues: list[Dialogue]
    catalog: MemeCatalog
    vocab: Vocab
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        """Cross-reference checks: meme ids resolve, token ids in range."""
        v = len(self.vocab)
        for di, d in enumerate(self.dialogues):
            for u in d.utterances:
                if u.meme_id is not None and u.meme_id not in self.catalog:
                    raise CorpusError(f"dialogue {di}: dangling meme id {u.meme_id}")
                for t in u.text:
                    if not 0 <= t < v:
                        raise CorpusError(f"dialogue {di}: token id {t} out of vocab")

    def used_meme_ids(self) -> set[int]:
        return {
            u.meme_id
            for d in self.dialogues
            for u in d.utterances
            if u.meme_id is not None
        }
