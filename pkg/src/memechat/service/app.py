"""HTTP chat service: sessions, messages, meme palette, attention traces.

Model parameters are immutable and shared read-only across sessions; each
session takes an exclusive non-blocking lock per turn, so two simultaneous
posts to one session yield exactly one 409.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, HTTPException, Response as HttpResponse
from fastapi.middleware.cors import CORSMiddleware

from ..corpus.types import MemeCatalog, Utterance
from ..corpus.vocab import Vocab
from ..decoding.pipeline import respond
from ..decoding.sampler import SamplerConfig
from ..model.config import ModelConfig
from ..model.network import Params
from ..numerics import derive_seed
from .schemas import (
    API_VERSION,
    AttentionPayload,
    ChatTurnResult,
    CreateSessionRequest,
    HistoryResponse,
    MemeListResponse,
    MemeSummary,
    MessageRequest,
    RankedMeme,
    ReplyPayload,
    SessionInfo,
    UtterancePayload,
)
from .sessions import Session, SessionStore, UnknownSession

USER_SPEAKER = 1
MODEL_SPEAKER = 2

_GROUP_COLORS = {
    "atmosphere_adjustment": "#7aa2f7",
    "basic_expression": "#9ece6a",
    "basic_emotion": "#f7768e",
    "common_semantics": "#e0af68",
}


@dataclass
class ModelRuntime:
    params: Params
    model_cfg: ModelConfig
    vocab: Vocab
    catalog: MemeCatalog
    max_len: int = 500
    default_sampler: SamplerConfig = None  # type: ignore[assignment]
    usage_threshold: float = 0.5
    top_k: int = 5

    def __post_init__(self):
        if self.default_sampler is None:
            self.default_sampler = SamplerConfig()


def _placeholder_svg(meme_id: int, group: str, emotions: list[str]) -> str:
    color = _GROUP_COLORS.get(group, "#bb9af7")
    tone = hashlib.sha256(str(meme_id).encode()).hexdigest()[:6]
    label = emotions[0] if emotions else group.replace("_", " ")
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" width="96" height="96">'
        f'<rect width="96" height="96" rx="14" fill="{color}"/>'
        f'<circle cx="48" cy="38" r="20" fill="#{tone}"/>'
        f'<text x="48" y="44" font-size="14" text-anchor="middle" fill="#1a1b26">'
        f"#{meme_id}</text>"
        f'<text x="48" y="78" font-size="11" text-anchor="middle" fill="#1a1b26">'
        f"{label}</text></svg>"
    )


def create_app(
    runtime: ModelRuntime,
    cors_origins: tuple[str, ...] = ("*",),
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="memechat", version=API_VERSION)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    store = SessionStore()
    app.state.runtime = runtime
    app.state.sessions = store

    def get_session(session_id: str) -> Session:
        try:
            return store.get(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail="unknown session") from None

    def utterance_payload(u: Utterance) -> UtterancePayload:
        return UtterancePayload(
            speaker=u.speaker,
            text=runtime.vocab.decode(u.text),
            meme_id=u.meme_id,
            emotion=u.emotion,
        )

    @app.post(
        f"/api/{API_VERSION}/sessions", response_model=SessionInfo, status_code=201
    )
    def create_session(req: CreateSessionRequest) -> SessionInfo:
        sampler = runtime.default_sampler
        seed = req.seed if req.seed is not None else int(np.random.default_rng().integers(2**31))
        session = store.create(
            seed=seed,
            top_p=req.top_p if req.top_p is not None else sampler.top_p,
            temperature=req.temperature if req.temperature is not None else sampler.temperature,
            max_new_tokens=(
                req.max_new_tokens
                if req.max_new_tokens is not None
                else sampler.max_new_tokens
            ),
            usage_threshold=(
                req.usage_threshold
                if req.usage_threshold is not None
                else runtime.usage_threshold
            ),
        )
        return SessionInfo(
            session_id=session.id, seed=session.seed, created_at=session.created_at
        )

    @app.get(f"/api/{API_VERSION}/memes", response_model=MemeListResponse)
    def list_memes() -> MemeListResponse:
        return MemeListResponse(
            feature_dim=runtime.catalog.feature_dim,
            memes=[
                MemeSummary(
                    id=e.id,
                    group=e.group,
                    emotions=list(e.emotion_tags),
                    ocr=e.ocr_text,
                    image_url=f"/api/{API_VERSION}/memes/{e.id}/image",
                )
                for e in sorted(runtime.catalog, key=lambda e: e.id)
            ],
        )

    @app.get(f"/api/{API_VERSION}/memes/{{meme_id}}/image")
    def meme_image(meme_id: int) -> HttpResponse:
        if meme_id not in runtime.catalog:
            raise HTTPException(status_code=404, detail="unknown meme")
        entry = runtime.catalog.get(meme_id)
        svg = _placeholder_svg(entry.id, entry.group, list(entry.emotion_tags))
        return HttpResponse(content=svg, media_type="image/svg+xml")

    @app.post(
        f"/api/{API_VERSION}/sessions/{{session_id}}/messages",
        response_model=ChatTurnResult,
    )
    def post_message(session_id: str, req: MessageRequest) -> ChatTurnResult:
        session = get_session(session_id)
        if req.meme_id is not None and req.meme_id not in runtime.catalog:
            raise HTTPException(status_code=422, detail="unknown meme_id")
        if not session.lock.acquire(blocking=False):
            raise HTTPException(
                status_code=409, detail="session busy with another turn"
            )
        try:
            text_ids = tuple(runtime.vocab.encode_text(req.text)) if req.text else ()
            user_utt = Utterance(
                speaker=USER_SPEAKER, text=text_ids, meme_id=req.meme_id
            )
            history = [*session.utterances, user_utt]
            sampler = SamplerConfig(
                top_p=session.top_p,
                temperature=session.temperature,
                max_new_tokens=session.max_new_tokens,
                seed=derive_seed(session.seed, session.turn_index),
            )
            result, trace = respond(
                history,
                runtime.params,
                runtime.model_cfg,
                runtime.catalog,
                sampler,
                threshold=session.usage_threshold,
                k=runtime.top_k,
                max_len=runtime.max_len,
            )
            meme_id = result.meme_id
            if not result.text and meme_id is None:
                # a reply may not be completely empty: fall back to the
                # nearest meme even though the usage head stayed below
                # threshold
                meme_id = result.ranked_memes[0][0] if result.ranked_memes else None
                if meme_id is None:
                    raise HTTPException(
                        status_code=500, detail="model produced an empty turn"
                    )
            model_utt = Utterance(
                speaker=MODEL_SPEAKER, text=result.text, meme_id=meme_id
            )
            session.utterances.append(user_utt)
            session.utterances.append(model_utt)
            session.turn_index += 1
            session.updated_at = time.time()
            return ChatTurnResult(
                session_id=session.id,
                turn_index=session.turn_index - 1,
                user=utterance_payload(user_utt),
                reply=ReplyPayload(
                    text=runtime.vocab.decode(result.text),
                    meme_id=meme_id,
                    usage_prob=result.usage_prob,
                    ranked_memes=[
                        RankedMeme(id=i, distance=d) for i, d in result.ranked_memes
                    ],
                    attention=AttentionPayload(
                        tokens=[
                            runtime.vocab.token_of(int(t)) for t in trace.token_ids
                        ],
                        weights=[float(w) for w in trace.attention],
                    ),
                ),
            )
        finally:
            session.lock.release()

    @app.get(
        f"/api/{API_VERSION}/sessions/{{session_id}}/history",
        response_model=HistoryResponse,
    )
    def get_history(session_id: str) -> HistoryResponse:
        session = get_session(session_id)
        return HistoryResponse(
            session_id=session.id,
            utterances=[utterance_payload(u) for u in session.utterances],
        )

    @app.delete(f"/api/{API_VERSION}/sessions/{{session_id}}", status_code=204)
    def delete_session(session_id: str) -> None:
        try:
            store.delete(session_id)
        except UnknownSession:
            raise HTTPException(status_code=404, detail="unknown session") from None

    return app
