from .flatten import (
    LM_IGNORE,
    SEG_MEME,
    SEG_TEXT,
    SEG_USER1,
    SEG_USER2,
    MemeSlot,
    TagSite,
    TokenSequence,
    flatten_dialogue,
    flatten_utterances,
    make_examples,
    unflatten,
)
from .io import (
    dialogue_to_row,
    load_catalog,
    load_corpus,
    save_catalog,
    save_corpus,
)
from .split import SPLIT_NAMES, split_corpus
from .stats import CorpusStats, corpus_stats
from .synth import EMOTIONS, emotion_of_meme, synth_catalog, synth_corpus, topic_of_meme
from .types import (
    MEME_GROUPS,
    Corpus,
    CorpusError,
    Dialogue,
    MemeCatalog,
    MemeEntry,
    Utterance,
)
from .vocab import (
    BOS,
    EOS,
    MEME,
    PAD,
    RESERVED,
    SPEAKER1,
    SPEAKER2,
    SPEAKER_TOKENS,
    TAG,
    UNK,
    Vocab,
    build_vocab,
    tokenize,
)
