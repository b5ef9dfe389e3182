"""In-memory chat sessions; each session serializes its own turns."""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..corpus.io import dialogue_to_row
from ..corpus.types import Dialogue, Utterance
from ..corpus.vocab import Vocab


class UnknownSession(KeyError):
    pass


class SessionBusy(RuntimeError):
    pass


@dataclass
class Session:
    id: str
    seed: int
    created_at: float
    updated_at: float
    top_p: float
    temperature: float
    max_new_tokens: int
    usage_threshold: float
    utterances: list[Utterance] = field(default_factory=list)
    turn_index: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def to_dialogue(self) -> Dialogue:
        return Dialogue(tuple(self.utterances))


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._guard = threading.Lock()

    def create(
        self,
        seed: int,
        top_p: float,
        temperature: float,
        max_new_tokens: int,
        usage_threshold: float,
    ) -> Session:
        now = time.time()
        session = Session(
            id=uuid.uuid4().hex,
            seed=seed,
            created_at=now,
            updated_at=now,
            top_p=top_p,
            temperature=temperature,
            max_new_tokens=max_new_tokens,
            usage_threshold=usage_threshold,
        )
        with self._guard:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(session_id)
        return session

    def delete(self, session_id: str) -> None:
        with self._guard:
            if session_id not in self._sessions:
                raise UnknownSession(session_id)
            del self._sessions[session_id]

    def ids(self) -> list[str]:
        return list(self._sessions)

    def dump_jsonl(self, path: str | Path, vocab: Vocab) -> int:
        """Persist completed sessions as corpus-format dialogue lines."""
        written = 0
        with Path(path).open("w", encoding="utf-8") as fh:
            for session in self._sessions.values():
                if len(session.utterances) < 2:
                    continue
                try:
                    row = dialogue_to_row(session.to_dialogue(), vocab)
                except Exception:
                    continue
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
                written += 1
        return written
