"""Versioned pydantic request/response models for the /api/v1 surface."""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator

API_VERSION = "v1"


class CreateSessionRequest(BaseModel):
    seed: int | None = None
    top_p: float | None = Field(default=None, gt=0.0, le=1.0)
    temperature: float | None = Field(default=None, gt=0.0)
    max_new_tokens: int | None = Field(default=None, ge=0, le=256)
    usage_threshold: float | None = Field(default=None, ge=0.0, le=1.0)


class SessionInfo(BaseModel):
    api_version: str = API_VERSION
    session_id: str
    seed: int
    created_at: float


class MessageRequest(BaseModel):
    text: str | None = None
    meme_id: int | None = None

    @model_validator(mode="after")
    def _non_empty(self):
        if (self.text is None or not self.text.strip()) and self.meme_id is None:
            raise ValueError("message needs text, a meme, or both")
        return self


class UtterancePayload(BaseModel):
    speaker: int
    text: str
    meme_id: int | None = None
    emotion: str | None = None


class RankedMeme(BaseModel):
    id: int
    distance: float


class AttentionPayload(BaseModel):
    tokens: list[str]
    weights: list[float]


class ReplyPayload(BaseModel):
    text: str
    meme_id: int | None
    usage_prob: float
    ranked_memes: list[RankedMeme]
    attention: AttentionPayload


class ChatTurnResult(BaseModel):
    api_version: str = API_VERSION
    session_id: str
    turn_index: int
    user: UtterancePayload
    reply: ReplyPayload


class HistoryResponse(BaseModel):
    api_version: str = API_VERSION
    session_id: str
    utterances: list[UtterancePayload]


class MemeSummary(BaseModel):
    id: int
    group: str
    emotions: list[str]
    ocr: str | None = None
    image_url: str


class MemeListResponse(BaseModel):
    api_version: str = API_VERSION
    feature_dim: int
    memes: list[MemeSummary]
