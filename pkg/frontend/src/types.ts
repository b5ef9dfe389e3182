// Payload shapes for the versioned /api/v1 surface. Unknown extra fields
// are tolerated everywhere: each interface lists only what the client reads.

export interface SessionInfo {
  api_version: string;
  session_id: string;
  seed: number;
  created_at: number;
}

export interface UtterancePayload {
  speaker: number;
  text: string;
  meme_id: number | null;
  emotion?: string | null;
}

export interface RankedMeme {
  id: number;
  distance: number;
}

export interface AttentionPayload {
  tokens: string[];
  weights: number[];
}

export interface ReplyPayload {
  text: string;
  meme_id: number | null;
  usage_prob: number;
  ranked_memes: RankedMeme[];
  attention: AttentionPayload;
}

export interface ChatTurnResult {
  api_version: string;
  session_id: string;
  turn_index: number;
  user: UtterancePayload;
  reply: ReplyPayload;
}

export interface MemeSummary {
  id: number;
  group: string;
  emotions: string[];
  ocr: string | null;
  image_url: string;
}

export interface MemeListResponse {
  api_version: string;
  feature_dim: number;
  memes: MemeSummary[];
}

export interface HistoryResponse {
  api_version: string;
  session_id: string;
  utterances: UtterancePayload[];
}

export interface SamplerSettings {
  seed?: number;
  top_p?: number;
  temperature?: number;
  max_new_tokens?: number;
  usage_threshold?: number;
}
