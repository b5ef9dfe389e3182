"""Reading and writing the JSONL corpus, JSON catalog, and JSON vocab files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .types import Corpus, CorpusError, Dialogue, MemeCatalog, MemeEntry, Utterance
from .vocab import Vocab, build_vocab, tokenize


def load_catalog(path: str | Path) -> MemeCatalog:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        dim = int(payload["feature_dim"])
        entries = [
            MemeEntry(
                id=int(m["id"]),
                feature=np.asarray(m["feature"], dtype=np.float32),
                ocr_text=m.get("ocr"),
                group=m["group"],
                emotion_tags=tuple(m.get("emotions", ())),
            )
            for m in payload["memes"]
        ]
    except KeyError as exc:
        raise CorpusError(f"catalog file {path}: missing field {exc}") from None
    return MemeCatalog(entries, feature_dim=dim)


def save_catalog(catalog: MemeCatalog, path: str | Path) -> None:
    payload = {
        "feature_dim": catalog.feature_dim,
        "memes": [
            {
                "id": e.id,
                "feature": [float(x) for x in e.feature],
                "ocr": e.ocr_text,
                "group": e.group,
                "emotions": list(e.emotion_tags),
            }
            for e in sorted(catalog, key=lambda e: e.id)
        ],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True), encoding="utf-8"
    )


def _parse_utterance(raw: dict, line_no: int, vocab: Vocab) -> Utterance:
    for field in ("speaker", "text"):
        if field not in raw:
            raise CorpusError(f"line {line_no}: utterance missing field '{field}'")
    speaker = raw["speaker"]
    if speaker not in (1, 2):
        raise CorpusError(f"line {line_no}: field 'speaker' must be 1 or 2")
    text = raw["text"]
    if text is None:
        text = ""
    if not isinstance(text, str):
        raise CorpusError(f"line {line_no}: field 'text' must be a string")
    meme_id = raw.get("meme_id")
    if meme_id is not None and not isinstance(meme_id, int):
        raise CorpusError(f"line {line_no}: field 'meme_id' must be an integer or null")
    emotion = raw.get("emotion")
    if emotion is not None and not isinstance(emotion, str):
        raise CorpusError(f"line {line_no}: field 'emotion' must be a string or null")
    try:
        return Utterance(
            speaker=speaker,
            text=tuple(vocab.encode_text(text)),
            meme_id=meme_id,
            emotion=emotion,
        )
    except CorpusError as exc:
        raise CorpusError(f"line {line_no}: {exc}") from None


def load_corpus(
    path: str | Path,
    catalog: MemeCatalog | str | Path,
    vocab: Vocab | None = None,
    min_freq: int = 1,
) -> Corpus:
    """Load a JSONL corpus; builds the vocab from the file unless one is given."""
    if not isinstance(catalog, MemeCatalog):
        catalog = load_catalog(catalog)
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    rows: list[dict] = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {line_no}: invalid JSON ({exc.msg})") from None
        if "utterances" not in row or not isinstance(row["utterances"], list):
            raise CorpusError(f"line {line_no}: missing field 'utterances'")
        row["_line"] = line_no
        rows.append(row)

    if vocab is None:
        streams = (
            tokenize(u.get("text") or "")
            for row in rows
            for u in row["utterances"]
            if isinstance(u, dict)
        )
        vocab = build_vocab(streams, min_freq=min_freq)

    dialogues: list[Dialogue] = []
    for row in rows:
        line_no = row["_line"]
        utts = [_parse_utterance(u, line_no, vocab) for u in row["utterances"]]
        try:
            dialogues.append(Dialogue(tuple(utts)))
        except CorpusError as exc:
            raise CorpusError(f"line {line_no}: {exc}") from None

    corpus = Corpus(dialogues=dialogues, catalog=catalog, vocab=vocab)
    corpus.validate()
    return corpus


def dialogue_to_row(d: Dialogue, vocab: Vocab) -> dict:
    return {
        "utterances": [
            {
                "speaker": u.speaker,
                "text": vocab.decode(u.text),
                "meme_id": u.meme_id,
                "emotion": u.emotion,
            }
            for u in d.utterances
        ]
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for d in corpus.dialogues:
            fh.write(json.dumps(dialogue_to_row(d, corpus.vocab), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
