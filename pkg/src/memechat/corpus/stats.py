"""Exact corpus statistics; averages are true rationals of the counts."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .types import Corpus, CorpusError


@dataclass(frozen=True)
class CorpusStats:
    n_dialogues: int
    n_utterances: int
    n_tokens: int
    n_token_types: int
    n_memes: int
    n_meme_usages: int
    avg_utt_per_dialogue: Fraction
    avg_memes_per_dialogue: Fraction
    avg_tokens_per_utt: Fraction

    def display(self) -> dict[str, str]:
        """Counts plus the 2-decimal rendering used in tables."""
        return {
            "dialogues": str(self.n_dialogues),
            "utterances": str(self.n_utterances),
            "token_types": str(self.n_token_types),
            "memes": str(self.n_memes),
            "avg_utterances_per_dialogue": f"{float(self.avg_utt_per_dialogue):.2f}",
            "avg_memes_per_dialogue": f"{float(self.avg_memes_per_dialogue):.2f}",
            "avg_tokens_per_utterance": f"{float(self.avg_tokens_per_utt):.2f}",
        }


def corpus_stats(corpus: Corpus) -> CorpusStats:
    if not corpus.dialogues:
        raise CorpusError("corpus_stats: empty corpus")
    n_dialogues = len(corpus.dialogues)
    n_utterances = 0
    n_tokens = 0
    n_meme_usages = 0
    token_types: set[int] = set()
    meme_ids: set[int] = set()
    for d in corpus.dialogues:
        n_utterances += len(d.utterances)
        for u in d.utterances:
            n_tokens += len(u.text)
            token_types.update(u.text)
            if u.meme_id is not None:
                n_meme_usages += 1
                meme_ids.add(u.meme_id)
    return CorpusStats(
        n_dialogues=n_dialogues,
        n_utterances=n_utterances,
        n_tokens=n_tokens,
        n_token_types=len(token_types),
        n_memes=len(meme_ids),
        n_meme_usages=n_meme_usages,
        avg_utt_per_dialogue=Fraction(n_utterances, n_dialogues),
        avg_memes_per_dialogue=Fraction(n_meme_usages, n_dialogues),
        avg_tokens_per_utt=Fraction(n_tokens, n_utterances),
    )
