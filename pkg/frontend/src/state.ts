import { ApiClient, ApiError } from "./api.js";
import type {
  MemeSummary,
  RankedMeme,
  AttentionPayload,
  SamplerSettings,
} from "./types.js";

export interface ChatMessage {
  speaker: number;
  text: string;
  memeId: number | null;
  /** model-reply extras; absent on user turns */
  usageProb?: number;
  rankedMemes?: RankedMeme[];
  attention?: AttentionPayload;
  /** optimistic entry awaiting server confirmation */
  pending?: boolean;
}

export interface ChatViewState {
  sessionId: string | null;
  messages: ChatMessage[];
  palette: MemeSummary[];
  overlayEnabled: boolean;
  sampler: SamplerSettings;
  busy: boolean;
  error: string | null;
}

type Listener = (state: ChatViewState) => void;

/** Client-side session state. The server owns the history: every rendered
 * message comes from a server response, and the only transient exception is
 * the optimistic pending bubble, which is rolled back if the turn fails. */
export class ChatStore {
  readonly state: ChatViewState = {
    sessionId: null,
    messages: [],
    palette: [],
    overlayEnabled: true,
    sampler: {},
    busy: false,
    error: null,
  };

  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  async loadPalette(): Promise<void> {
    const listing = await this.api.getMemes();
    this.state.palette = listing.memes;
    this.emit();
  }

  async startSession(settings: SamplerSettings = {}): Promise<string> {
    const info = await this.api.createSession({ ...this.state.sampler, ...settings });
    this.state.sessionId = info.session_id;
    this.state.messages = [];
    this.state.error = null;
    this.emit();
    return info.session_id;
  }

  setSampler(settings: SamplerSettings): void {
    this.state.sampler = { ...this.state.sampler, ...settings };
    this.emit();
  }

  toggleOverlay(): void {
    this.state.overlayEnabled = !this.state.overlayEnabled;
    this.emit();
  }

  /** One chat turn: optimistic user bubble, then both turns as the server
   * recorded them. Returns false when the turn was rejected (state rolled
   * back, error set). */
  async sendTurn(text?: string, memeId?: number): Promise<boolean> {
    const trimmed = text?.trim() ?? "";
    if (!trimmed && memeId === undefined) {
      this.state.error = "compose a message or pick a meme first";
      this.emit();
      return false;
    }
    if (!this.state.sessionId) throw new Error("no session");
    const optimistic: ChatMessage = {
      speaker: 1,
      text: trimmed,
      memeId: memeId ?? null,
      pending: true,
    };
    this.state.messages.push(optimistic);
    this.state.busy = true;
    this.state.error = null;
    this.emit();

    const body: { text?: string; meme_id?: number } = {};
    if (trimmed) body.text = trimmed;
    if (memeId !== undefined) body.meme_id = memeId;
    try {
      const turn = await this.api.postMessage(this.state.sessionId, body);
      this.state.messages.pop(); // replace the pending bubble
      this.state.messages.push({
        speaker: turn.user.speaker,
        text: turn.user.text,
        memeId: turn.user.meme_id,
      });
      this.state.messages.push({
        speaker: 2,
        text: turn.reply.text,
        memeId: turn.reply.meme_id,
        usageProb: turn.reply.usage_prob,
        rankedMemes: turn.reply.ranked_memes,
        attention: turn.reply.attention,
      });
      return true;
    } catch (err) {
      this.state.messages.pop(); // rollback: no duplicate history entries
      this.state.error =
        err instanceof ApiError
          ? err.status === 409
            ? "the model is still answering the previous turn"
            : err.detail
          : String(err);
      return false;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  /** Re-fetch the transcript; the server is the source of truth. Reply
   * extras (badges, attention) are re-attached from local knowledge when
   * the turn content matches. */
  async syncHistory(): Promise<void> {
    if (!this.state.sessionId) return;
    const history = await this.api.getHistory(this.state.sessionId);
    const extras = this.state.messages.filter((m) => m.usageProb !== undefined);
    let extraIdx = 0;
    this.state.messages = history.utterances.map((u) => {
      const message: ChatMessage = {
        speaker: u.speaker,
        text: u.text,
        memeId: u.meme_id,
      };
      if (u.speaker === 2 && extraIdx < extras.length) {
        const extra = extras[extraIdx]!;
        if (extra.text === u.text && extra.memeId === u.meme_id) {
          message.usageProb = extra.usageProb;
          message.rankedMemes = extra.rankedMemes;
          message.attention = extra.attention;
        }
        extraIdx += 1;
      }
      return message;
    });
    this.emit();
  }
}
